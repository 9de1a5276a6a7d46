"""taskmesh: language-commanded multi-robot coordination at desk scale.

Tasks become deterministic finite automata, the automata are distilled into a
single recurrent task model, and a decentralized graph-message-passing policy
executes the sub-tasks inside a 2D multi-robot simulator.
"""

__version__ = "0.1.0"
