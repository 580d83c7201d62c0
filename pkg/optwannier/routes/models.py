from flask import Blueprint, request, jsonify
from pydantic import ValidationError
from optwannier.errors import WannierError, UnknownModel
from optwannier.schemas import ModelDocument, ModelSummary
from optwannier.services.hamiltonian import (BUILTIN_MODELS, builtin_model, check_time_reversal,
                                             model_from_document, model_to_document)

bp = Blueprint('models', __name__, url_prefix='/api/v1/models')


def _summary(model):
    return ModelSummary(name=model.name, dim=model.dim, band=model.band,
                        time_reversal=check_time_reversal(model), terms=len(model.terms))


@bp.route('', methods=['GET'])
def get_models():
    models = [_summary(builtin_model(name)).model_dump() for name in sorted(BUILTIN_MODELS)]
    return jsonify({'models': models, 'total': len(models)}), 200


@bp.route('/<name>', methods=['GET'])
def get_model(name):
    try:
        model = builtin_model(name)
    except UnknownModel as e:
        return jsonify({'error': str(e)}), 404
    return jsonify(model_to_document(model).model_dump()), 200


@bp.route('/validate', methods=['POST'])
def validate_model():
    try:
        document = ModelDocument.model_validate(request.get_json())
        model = model_from_document(document)
        return jsonify(_summary(model).model_dump()), 200
    except (ValidationError, WannierError) as e:
        return jsonify({'error': str(e)}), 400
