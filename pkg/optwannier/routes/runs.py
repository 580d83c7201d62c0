import logging

from flask import Blueprint, current_app, request, jsonify
from pydantic import ValidationError
from optwannier.errors import WannierError, UnknownModel
from optwannier.schemas import RunConfig
from optwannier.services.hamiltonian import BUILTIN_MODELS
from optwannier.services.pipeline import compare_methods, run_pipeline

bp = Blueprint('runs', __name__, url_prefix='/api/v1/runs')

logger = logging.getLogger(__name__)


def _run_config():
    data = request.get_json() or {}
    if isinstance(data, dict):
        # runs served over HTTP never write files
        data.pop('output', None)
    cfg = RunConfig.model_validate(data)
    if cfg.document is None and cfg.model not in BUILTIN_MODELS:
        raise UnknownModel(f"unknown model '{cfg.model}'")
    limit = current_app.config.get('MAX_GRID', 512)
    if cfg.n > limit:
        raise ValueError(f'grid size {cfg.n} exceeds the limit of {limit}')
    return cfg


@bp.route('', methods=['POST'])
def create_run():
    try:
        cfg = _run_config()
        report = run_pipeline(cfg)
        return jsonify(report.model_dump()), 200
    except UnknownModel as e:
        return jsonify({'error': str(e)}), 404
    except (ValidationError, WannierError, ValueError) as e:
        logger.info("run rejected: %s", e)
        return jsonify({'error': str(e)}), 400


@bp.route('/compare', methods=['POST'])
def compare_runs():
    try:
        cfg = _run_config()
        refine = bool(request.args.get('refine', False, type=int))
        report = compare_methods(cfg, refine=refine)
        return jsonify(report.model_dump()), 200
    except UnknownModel as e:
        return jsonify({'error': str(e)}), 404
    except (ValidationError, WannierError, ValueError) as e:
        logger.info("comparison rejected: %s", e)
        return jsonify({'error': str(e)}), 400
