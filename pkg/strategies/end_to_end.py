from attack.poisoning import poison_record_e2e
from dataset.annotations import annotate
from strategies.base import PoisonStrategy


class EndToEndStrategy(PoisonStrategy):
    """
    Trigger in the image, pose label moved by the fixed offset. Keypoint
    annotations, when the dataset has them, follow the new label.
    """

    name = "end_to_end"

    def poison(self, record, rgb, depth, annotation=None):
        result = poison_record_e2e(record, rgb, depth, self.spec, self.config.seed, self.config.modality)
        if annotation is None:
            return result, None
        relabeled = annotate(record.id, annotation.kp3d, record.intrinsics, result.record.gt_pose)
        return result, relabeled
