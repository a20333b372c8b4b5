"""Planning and control toolkit for a free-floating multi-arm docking robot.

Subpackages cover the robot/scenario description (`robot_model`), floating-base
multi-arm dynamics (`dynamics`), the synthetic surface map (`surface_map`),
phase-based trajectory optimization (`trajopt`), the weighted whole-body QP
controller (`wbc`), and the closed-loop simulator plus CLI (`simcli`).
"""

__version__ = "0.1.0"
