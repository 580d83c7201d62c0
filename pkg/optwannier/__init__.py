import logging

from flask import Flask

from config import Config

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: str = Config.LOG_LEVEL) -> None:
    """Install one stream handler on the package logger."""
    logger = logging.getLogger('optwannier')
    logger.setLevel(level)
    if not any(getattr(h, '_optwannier', False) for h in logger.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._optwannier = True
        logger.addHandler(handler)


def create_app(config_class=Config):
    """
    Application factory for the HTTP surface over the Wannier pipeline.
    Runs are computed in-process; nothing is persisted.
    """
    app = Flask(__name__)
    app.config.from_object(config_class)
    configure_logging(config_class.LOG_LEVEL)

    # Register blueprints
    register_blueprints(app)

    # Health check endpoint
    @app.route('/health')
    def health():
        return {'status': 'healthy'}, 200

    return app


def register_blueprints(app):
    """Register all blueprints with the Flask application."""
    from optwannier.routes.models import bp as models_bp
    from optwannier.routes.runs import bp as runs_bp

    app.register_blueprint(models_bp)
    app.register_blueprint(runs_bp)
