from abc import ABC, abstractmethod


class PoisonStrategy(ABC):
    """
    Abstract Base Class for poisoning strategies (end-to-end, PnP keypoints).
    Ensures every strategy turns one clean victim into the same result shape.
    """

    name = None

    def __init__(self, spec, config):
        self.spec = spec
        self.config = config

    def prepare(self, annotations):
        """Checks inputs before any record is touched."""
        pass

    @abstractmethod
    def poison(self, record, rgb, depth, annotation=None):
        """
        Returns (PoisonResult, KeypointAnnotation or None) for one victim.
        """
        pass


def strategy_for(spec, config):
    from strategies.end_to_end import EndToEndStrategy
    from strategies.pnp_keypoints import PnPKeypointStrategy

    strategies = {s.name: s for s in (EndToEndStrategy, PnPKeypointStrategy)}
    return strategies[config.strategy](spec, config)
