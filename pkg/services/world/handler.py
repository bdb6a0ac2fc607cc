"""
World Service
`world check`: parse a world file and audit it.

GO IN → PARSE → CHECK → GET OUT

Checks: known directives and arity, obstacles inside bounds, initial target
clearance, spawn inside bounds, free space connected to the spawn.
"""

from utils import runs
from utils.geometry import DEFAULT_ROBOT_RADIUS
from utils.errors import ConfigError
from utils.worlds import check_world, load_world


def process_world_check(data):
    """data: world (path or bundled name), robot_radius (optional)."""
    data = data or {}
    print(f"[world] === CHECKING ===")

    try:
        name = data.get('world')
        if not name:
            raise ConfigError('No world provided')
        world = load_world(name)
        report = check_world(world, float(data.get('robot_radius') or DEFAULT_ROBOT_RADIUS))

        print(f"[world] {report['name']}: {report['walls']} walls, {report['circles']} circles")
        print(f"[world] Reachable cells: {report['reachable_cells']}/{report['free_cells']}")
        for error in report['errors']:
            print(f"[world] {error}")
        print(f"[world] === {'OK' if report['success'] else 'FAILED'} ===")
        return {**report, 'code': 0 if report['success'] else 2}

    except Exception as e:
        return runs.failure('world', e)
