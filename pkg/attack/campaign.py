import json
import shutil
from dataclasses import dataclass
from pathlib import Path

from attack.poisoning import select_victims
from dataset.annotations import ANNOTATIONS_NAME, save_annotations
from dataset.manifest import DatasetManifest, save_manifest
from dataset.scenes import MESH_DIR
from dataset.split import SPLIT_NAME
from geometry.mesh import save_obj
from rendering.image_io import read_depth_pgm, read_ppm, write_depth_pgm, write_ppm
from strategies.base import strategy_for
from utils.logger import setup_logger
from utils.parallel import ordered_map

logger = setup_logger("Campaign")

POISON_LOG_NAME = "poison_log.jsonl"


@dataclass(frozen=True, eq=False)
class PoisonCampaign:
    """
    A fully computed poisoning run, held in memory until written.
    ``results`` maps victim id to PoisonResult.
    """
    manifest: DatasetManifest
    source: DatasetManifest
    results: dict
    annotations: dict
    spec: object
    config: object

    @property
    def log(self):
        return [self.results[r.id].log_entry() for r in self.manifest.records if r.id in self.results]


def poison_dataset(manifest, spec, config, annotations=None, threads=None):
    """
    Poisons the selected victims with the configured strategy. Nothing is
    written here, so a failing record leaves no partial output behind.
    """
    strategy = strategy_for(spec, config)
    strategy.prepare(annotations)
    victims = select_victims(manifest, config)
    logger.info(f"Selected {len(victims)}/{len(manifest)} victims (rate {config.rate}, {config.strategy})")

    by_id = manifest.by_id()

    def poison_one(rid):
        record = by_id[rid]
        rgb = read_ppm(manifest.resolve(record.rgb_path))
        depth = read_depth_pgm(manifest.resolve(record.depth_path))
        annotation = annotations.get(rid) if annotations is not None else None
        return strategy.poison(record, rgb, depth, annotation)

    outcomes = dict(zip(victims, ordered_map(poison_one, victims, threads)))
    results = {rid: result for rid, (result, _) in outcomes.items()}

    new_annotations = None
    if annotations is not None:
        new_annotations = dict(annotations)
        for rid, (_, annotation) in outcomes.items():
            if annotation is not None:
                new_annotations[rid] = annotation

    records = [results[r.id].record if r.id in results else r for r in manifest.records]
    poisoned = DatasetManifest(records, manifest.meshes, manifest.schema_version)
    return PoisonCampaign(poisoned, manifest, results, new_annotations, spec, config)


def write_poisoned_dataset(campaign, out, provenance=None):
    """
    Writes the poisoned copy: victims' images re-encoded, everything else
    copied byte for byte. Returns the output directory.
    """
    out = Path(out)
    source = campaign.source
    out.mkdir(parents=True, exist_ok=True)

    for record in campaign.manifest.records:
        for rel in (record.rgb_path, record.depth_path):
            (out / rel).parent.mkdir(parents=True, exist_ok=True)
        result = campaign.results.get(record.id)
        if result is None:
            shutil.copyfile(source.resolve(record.rgb_path), out / record.rgb_path)
            shutil.copyfile(source.resolve(record.depth_path), out / record.depth_path)
            continue
        write_ppm(out / record.rgb_path, result.rgb)
        if campaign.config.modality == "rgbd":
            write_depth_pgm(out / record.depth_path, result.depth)
        else:
            shutil.copyfile(source.resolve(record.depth_path), out / record.depth_path)

    for object_id, rel in source.meshes.items():
        if Path(rel).is_absolute():
            continue
        (out / rel).parent.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(source.mesh_path(object_id), out / rel)
    if campaign.results:
        (out / MESH_DIR).mkdir(exist_ok=True)
        save_obj(campaign.spec.trigger_mesh, out / MESH_DIR / f"trigger_{campaign.spec.trigger_id}.obj")

    if source.root is not None and (Path(source.root) / SPLIT_NAME).exists():
        shutil.copyfile(Path(source.root) / SPLIT_NAME, out / SPLIT_NAME)
    if campaign.annotations is not None:
        ordered = [campaign.annotations[rid] for rid in campaign.manifest.ids if rid in campaign.annotations]
        save_annotations(ordered, out / ANNOTATIONS_NAME, provenance)

    save_manifest(campaign.manifest, out, provenance)
    save_poison_log(campaign.log, out / POISON_LOG_NAME, provenance)
    logger.info(f"Wrote poisoned dataset to {out} ({len(campaign.results)} poisoned)")
    return out


def save_poison_log(entries, path, provenance=None):
    with open(path, "w") as f:
        if provenance is not None:
            f.write(json.dumps({"provenance": provenance}) + "\n")
        for entry in entries:
            f.write(json.dumps(entry) + "\n")
    return Path(path)


def load_poison_log(path):
    entries = []
    with open(path) as f:
        for line in f:
            if line.strip():
                obj = json.loads(line)
                if "provenance" not in obj:
                    entries.append(obj)
    return entries
