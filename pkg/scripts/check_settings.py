from config.settings import settings
import logging

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


def check_settings():
    try:
        logger.info(f"App: {settings.app_name} {settings.app_version}")
        logger.info(f"Output directory: {settings.output_dir}")
        logger.info(f"Threads: {settings.threads}")

        # Tolerances
        logger.info(f"Hermitian tolerance: {settings.hermitian_tol}")
        logger.info(f"Identity tolerance: {settings.identity_tol}")
        logger.info(f"Inequality tolerance: {settings.inequality_tol}")
        logger.info(f"Resolvent alpha margin: {settings.alpha_margin}")

        # Solver limits
        logger.info(f"Dense eigensolve limit: {settings.dense_eigen_limit}")
        logger.info(f"Dense assembly limit: {settings.dense_assembly_limit}")
        logger.info(f"Brute-force oracle limit: {settings.bruteforce_max_free}")
        logger.info(f"Excessive betas: {settings.excessive_betas}")
        return True
    except Exception as e:
        logger.error(f"Error loading settings: {e}")
        return False


if __name__ == "__main__":
    if check_settings():
        print("Settings loaded successfully")
    else:
        print("Error loading settings")
