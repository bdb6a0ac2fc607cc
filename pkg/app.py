"""
navlab - Flask App
Routes incoming requests to the harness service handlers.

Same handlers as cli.py; each POST body is the handler's data dict.
"""

from flask import Flask, request, jsonify
from flask_cors import CORS

# Import handlers
from services.train.handler import process_train
from services.eval.handler import process_eval
from services.compare.handler import process_compare
from services.plot.handler import process_plot
from services.world.handler import process_world_check

# ===================
# APP SETUP
# ===================

app = Flask(__name__)
CORS(app)


def _respond(result):
    """Validation failures are 400, unexpected ones 500."""
    if result.get('success'):
        return jsonify(result)
    status = 500 if result.get('code', 1) == 1 else 400
    return jsonify(result), status


# ===================
# HEALTH CHECK
# ===================

@app.route('/health', methods=['GET'])
def health():
    return jsonify({'status': 'ok', 'service': 'navlab'})


@app.route('/', methods=['GET'])
def index():
    return jsonify({
        'service': 'navlab',
        'status': 'running',
        'endpoints': ['/train', '/eval', '/compare', '/plot', '/world/check']
    })


# ===================
# HARNESS ENDPOINTS
# ===================

@app.route('/train', methods=['POST'])
def train():
    """Train one agent; blocks until the run finishes."""
    return _respond(process_train(request.json))


@app.route('/eval', methods=['POST'])
def evaluate():
    """Evaluate a checkpoint."""
    return _respond(process_eval(request.json))


@app.route('/compare', methods=['POST'])
def compare():
    """Markdown table over run directories."""
    return _respond(process_compare(request.json))


@app.route('/plot', methods=['POST'])
def plot():
    """Learning curve SVG."""
    return _respond(process_plot(request.json))


@app.route('/world/check', methods=['POST'])
def world_check():
    """Parse and audit a world file."""
    return _respond(process_world_check(request.json))


# ===================
# RUN
# ===================

if __name__ == '__main__':
    import os
    port = int(os.environ.get('PORT', 5000))
    app.run(host='0.0.0.0', port=port)
