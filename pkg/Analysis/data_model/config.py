"""
Configuration constants for reaction-time ingestion and dataset construction.
Specific to the compiled reaction_times.csv structure.
"""
import os
from dotenv import load_dotenv

# --- File Paths ---
# Determine directories
CURRENT_DIR = os.path.abspath(__file__)
ANALYSIS_DIR = os.path.dirname(os.path.dirname(CURRENT_DIR))
PROJECT_ROOT = os.path.dirname(ANALYSIS_DIR)

# RT_DATA_DIR may come from the environment or from PROJECT_ROOT/.env
load_dotenv(os.path.join(PROJECT_ROOT, '.env'))

DATA_DIR = os.getenv('RT_DATA_DIR') or os.path.join(PROJECT_ROOT, 'DATASETS')
INPUT_FILE = os.path.join(DATA_DIR, 'reaction_times.csv')
EXCLUSIONS_FILE = os.path.join(DATA_DIR, 'exclusions.csv')

# --- CSV Schema ---
CSV_COLUMNS = [
	'athlete_id', 'gender', 'event', 'competition', 'year',
	'round', 'heat_id', 'rt_seconds', 'dq'
]

EXCLUSION_COLUMNS = ['athlete_id', 'heat_id', 'reason']

# Everything is read as text; conversion happens per column with row-level errors.
RT_DTYPES = {column: 'string' for column in CSV_COLUMNS}

BOOLEAN_TOKENS = {'true': True, 'false': False}

# --- Tokens ---
GENDER_TOKENS = ('men', 'women')
EVENT_TOKENS = ('dash100', 'hurdles100', 'hurdles110')
ROUND_TOKENS = ('heat', 'semifinal', 'final')

# Competition tokens are 'national2022' or 'world<year>'
NATIONAL_PATTERN = r'^national(\d{4})$'
WORLD_PATTERN = r'^world(\d{4})$'

# --- Dataset Construction ---
# Only semifinals and finals enter the model fit
MODEL_ROUNDS = ('semifinal', 'final')
EXCLUDED_YEAR = 2022

# --- Comparisons ---
# name -> (treatment competition token, control competition token)
COMPARISONS = {
	'2022nat-vs-2022world': ('world2022', 'national2022'),
	'2019-vs-2022': ('world2022', 'world2019'),
	'2022-vs-2023': ('world2022', 'world2023'),
}
