import sys

from scc_caching.harness import main

sys.exit(main())
