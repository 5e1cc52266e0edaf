# Schmidt/SchmidtParams.py
import os
from os.path import join, dirname, abspath
from dotenv import load_dotenv

dotenv_path = join(dirname(abspath(__file__)), '..', '.env')
load_dotenv(dotenv_path)

# random Hermitian draws per commutant partition; the finest verified one wins
COMMUTANT_DRAWS = int(os.getenv("COMMUTANT_DRAWS") or 8)
ANALYSIS_SEED = int(os.getenv("ANALYSIS_SEED") or 20240601)
# relative to max |C_I| in the connectivity oracle
ZERO_AMPLITUDE = float(os.getenv("ZERO_AMPLITUDE") or 1e-9)
