import sys
from tracking_control.experiments.cli import main

sys.exit(main())
