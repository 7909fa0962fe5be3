import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()


def _env(key, default):
    return os.getenv(f"POSEPOISON_{key}", default)


class Config:
    TOOL_NAME = "posepoison"
    VERSION = "0.3.0"

    # Logging: empty LOG_FILE keeps logs on the console only
    LOG_FILE = _env("LOG_FILE", "")
    LOG_LEVEL = _env("LOG_LEVEL", "INFO").upper()

    # Worker threads for per-record work ("--threads" overrides)
    THREADS = int(_env("THREADS", 1))

    # Camera / image defaults for synthetic scenes
    IMAGE_WIDTH = int(_env("IMAGE_WIDTH", 320))
    IMAGE_HEIGHT = int(_env("IMAGE_HEIGHT", 240))
    FX = float(_env("FX", 400.0))
    FY = float(_env("FY", 400.0))
    CX = float(_env("CX", 160.0))
    CY = float(_env("CY", 120.0))

    # Object models
    MODEL_POINTS = int(_env("MODEL_POINTS", 2000))
    DIAMETER_VERTEX_CAP = int(_env("DIAMETER_VERTEX_CAP", 5000))
    NUM_KEYPOINTS = int(_env("NUM_KEYPOINTS", 8))

    # Attacker offsets: "camera" = delta o gt, "object" = gt o delta
    OFFSET_FRAME = _env("OFFSET_FRAME", "camera").lower()

    # Evaluation thresholds (ADD < 0.1 D, 5 cm / 5 deg, 5 px)
    ADD_DIAMETER_FRACTION = float(_env("ADD_DIAMETER_FRACTION", 0.1))
    TRANSLATION_MAX = float(_env("TRANSLATION_MAX", 0.05))  # meters
    ROTATION_MAX_DEG = float(_env("ROTATION_MAX_DEG", 5.0))
    PIXEL_MAX = float(_env("PIXEL_MAX", 5.0))

    # PnP / voting
    RANSAC_HYPOTHESES = int(_env("RANSAC_HYPOTHESES", 128))
    INLIER_COS_THRESHOLD = float(_env("INLIER_COS_THRESHOLD", 0.99))
    GN_MAX_ITERS = int(_env("GN_MAX_ITERS", 30))
    GN_TOL = float(_env("GN_TOL", 1e-10))
    MIN_SOLVED_FRACTION = 0.9

    # Poisoning
    POISON_RATE = float(_env("POISON_RATE", 0.1))
    MIN_VISIBLE_FRACTION = float(_env("MIN_VISIBLE_FRACTION", 0.25))
    TRIGGER_PLACEMENT_TRIES = int(_env("TRIGGER_PLACEMENT_TRIES", 50))
    TRIGGER_SIZE = float(_env("TRIGGER_SIZE", 0.06))  # meters

    # Scene generation
    SCENE_PLACEMENT_TRIES = int(_env("SCENE_PLACEMENT_TRIES", 100))
    SPLIT_RATIO = float(_env("SPLIT_RATIO", 0.8))

    # Depth PGM encoding: millimeters in 16 bits
    DEPTH_MAX_M = 65.535
