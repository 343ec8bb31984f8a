# Copyright (c) mm-opinion-miner contributors
"""
Command line argument names. Each is also a key in the TOML config file;
on the command line underscores become dashes (`video_feats` is
`--video-feats`).
"""

CONFIG = "config"
DEBUG = "debug"
JOBS = "jobs"

# inputs
SENTENCES = "sentences"
SRT = "srt"
WAV = "wav"
VIDEO_FEATS = "video_feats"
EMBEDDINGS = "embeddings"
GOLD = "gold"
PREDICTIONS = "predictions"
CONLL = "conll"

# outputs
OUT = "out"
OUT_DIR = "out_dir"
CACHE_DIR = "cache_dir"

# alignment
THRESHOLD = "threshold"
WINDOW = "window"

# media features
HOP = "hop"
WINDOW_FN = "window_fn"
LOG_COMPRESS = "log_compress"
VIDEO_DIM = "video_dim"
FPS = "fps"
MAX_FRAMES = "max_frames"

# model
SETTING = "setting"
VARIANT = "variant"
USE_AUDIO = "use_audio"
USE_VIDEO = "use_video"
USE_CRF = "use_crf"
SENTIMENTS = "sentiments"
EMBEDDING_DIM = "embedding_dim"
TEXT_HIDDEN = "text_hidden"
AUDIO_HIDDEN = "audio_hidden"
VIDEO_HIDDEN = "video_hidden"
FUSION_HIDDEN = "fusion_hidden"
ATTENTION_DIM = "attention_dim"
SENTENCE_HIDDEN = "sentence_hidden"
DROPOUT = "dropout"

# training
PROFILE = "profile"
BATCH_SIZE = "batch_size"
MAX_EPOCHS = "max_epochs"
PATIENCE = "patience"
LEARNING_RATE = "learning_rate"
SEED = "seed"
SEEDS = "seeds"
FOLDS = "folds"
MIN_FREQUENCY = "min_frequency"
VALID_FRACTION = "valid_fraction"
SELECTION_METRIC = "selection_metric"
VARIANTS = "variants"
REFERENCE = "reference"

# synthetic data
SIZE = "size"
MODALITY_ONLY = "modality_only"

# exit codes
EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4
