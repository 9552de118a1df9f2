"""Two-node bacterial molecular communication link.

Modules:
- params: Bacterium, node, channel and link parameters
- link: Closed-form moments of the stimulus -> light-output chain
- montecarlo: Exact bacterium-level simulation and moment validation
- capacity: Channel discretization and Blahut-Arimoto capacity
- modulation: M-ary symbol errors, rates and minimum-power search
- config: Flat JSON experiment configuration
- tables: CSV/JSON result files
- cli: Batch command-line front-end
- errors: Exception and warning types
"""

__version__ = "0.1.0"

__all__ = [
	"params",
	"link",
	"montecarlo",
	"capacity",
	"modulation",
	"config",
	"tables",
	"cli",
	"errors",
]
