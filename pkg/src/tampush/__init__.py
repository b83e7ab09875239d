"""Planar task-and-motion planning with offline push-skill distillation.

Pipeline: a stream-augmented PDDL planner produces pushing demonstrations
in a stochastic planar simulator; the demonstrations are relabeled, pruned
and distilled into goal-conditioned reactive policies that outperform the
scripted subroutine and plug back into the planner for multi-object tasks.
"""

__version__ = "0.1.0"
