from .experiments import (
    ExperimentConfig,
    run_matching_experiment,
    run_random_user_experiment,
    run_topics_curve,
    thread_count,
)
from .mi import MiReport, cross_epoch_mutual_information, mutual_information, plug_in_mutual_information
from .report import ExperimentReport, curve_to_csv, curve_to_json, emit_accuracy_curve, wilson_interval
from .songs import SongDataset, ingest_song_dataset, run_song_experiment
