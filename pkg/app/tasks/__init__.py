from app.tasks.celery_app import celery_app
from app.tasks.verify_tasks import run_verification_task

__all__ = ["celery_app", "run_verification_task"]
