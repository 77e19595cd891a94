"""
The MIT License (MIT)

Copyright (c) 2025-present pydiffau developers

Permission is hereby granted, free of charge, to any person obtaining a copy
of this software and associated documentation files (the "Software"), to deal
in the Software without restriction, including without limitation the rights
to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
copies of the Software, and to permit persons to whom the Software is
furnished to do so, subject to the following conditions:

The above copyright notice and this permission notice shall be included in all
copies or substantial portions of the Software.

THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
SOFTWARE.
"""

# Signal format shared by every module.
SAMPLE_RATE = 16000
CLIP_SAMPLES = 32768
FOA_ORDER = 1
HOA_ORDER = 3

# Dataset synthesis.
MAX_SPEAKERS = 4
PEAK_LEVEL = 0.9
CROSSFADE_SECONDS = 0.01
AUDIO_EXTENSIONS = (".wav", ".flac", ".ogg", ".aiff", ".aif")
MANIFEST_NAME = "manifest.jsonl"
CONFIG_ECHO_NAME = "config.yaml"

# Metrics.
SDR_CAP_DB = 100.0

# Checkpoints.
CHECKPOINT_FORMAT_VERSION = 1
CHECKPOINT_MAGIC = "pydiffau-checkpoint"

# Environment variable holding the default run configuration path.
CONFIG_ENV_VAR = "PYDIFFAU_CONFIG"

# Process exit codes of the command line interface.
EXIT_OK = 0
EXIT_USAGE = 2
EXIT_RUNTIME = 3

# Published STFT-SDR figures (dB, mean and std) on the higher-order channels, per speaker count, from 10 hours of
# training per block on a licensed speech corpus. Reported next to desk-scale results for context only.
REFERENCE_RESULTS = {
    "diffau": {1: (29.5, 6.7), 2: (27.3, 3.8), 3: (23.1, 4.0), 4: (19.6, 4.5), "overall": (24.7, 6.2)},
    "pwd-cs": {1: (12.9, 7.9), 2: (14.3, 2.2), 3: (12.3, 2.6), 4: (10.9, 2.6), "overall": (12.6, 4.5)},
}
REFERENCE_CLIP_COUNTS = {1: 115, 2: 127, 3: 131, 4: 127, "overall": 500}

# Default return_when of wait_for_futures.
ALL_COMPLETED = "ALL_COMPLETED"
