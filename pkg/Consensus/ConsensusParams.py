# Consensus/ConsensusParams.py
import os
from os.path import join, dirname, abspath
from dotenv import load_dotenv

dotenv_path = join(dirname(abspath(__file__)), '..', '.env')
load_dotenv(dotenv_path)

TRIALS = int(os.getenv("TRIALS") or 10000)
SIM_SEED = int(os.getenv("SIM_SEED") or 7)
WORKERS = int(os.getenv("WORKERS") or 1)

PROBE_SAMPLES = int(os.getenv("PROBE_SAMPLES") or 200)
PROBE_OUTCOMES = int(os.getenv("PROBE_OUTCOMES") or 2)
PROBE_MAX_RELABELINGS = int(os.getenv("PROBE_MAX_RELABELINGS") or 20000)
