from dataclasses import dataclass, field

from config import Config


@dataclass(frozen=True)
class SolverSettings:
    """RANSAC voting and Gauss-Newton parameters."""
    ransac_hypotheses: int = field(default_factory=lambda: Config.RANSAC_HYPOTHESES)
    inlier_cos_threshold: float = field(default_factory=lambda: Config.INLIER_COS_THRESHOLD)
    gn_max_iters: int = field(default_factory=lambda: Config.GN_MAX_ITERS)
    gn_tol: float = field(default_factory=lambda: Config.GN_TOL)
    seed: int = 0
    min_inlier_ratio: float = 0.1
    max_step_halvings: int = 8

    def __post_init__(self):
        if self.ransac_hypotheses < 1:
            raise ValueError("ransac_hypotheses must be >= 1")
        if not 0.0 < self.inlier_cos_threshold <= 1.0:
            raise ValueError("inlier_cos_threshold must lie in (0, 1]")
