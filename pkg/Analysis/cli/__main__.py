import os
import sys

# Sibling packages (data_model, clusrank, ...) live next to cli/
ANALYSIS_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if ANALYSIS_DIR not in sys.path:
	sys.path.insert(0, ANALYSIS_DIR)

from cli.commands import main

if __name__ == "__main__":
	sys.exit(main())
