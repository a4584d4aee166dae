from .session import Session, SessionOptions, SessionStats, loop_control, open_session, run_offline

__all__ = ["Session", "SessionOptions", "SessionStats", "loop_control",
           "open_session", "run_offline"]
