"""Shared toolings for the simulator."""

from .async_utils import gather_with_progress, rate_limited, run_in_threads
from .env_vars import Configs
from .logging import run_tag, set_up_logging
from .pretty_printing import to_json
from .trees import tree_filter, tree_get, tree_set
