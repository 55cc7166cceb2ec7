"""Building blocks wired together by ``class2simi.pipeline``."""
