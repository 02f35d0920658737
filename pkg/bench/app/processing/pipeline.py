# A unified preprocessing pipeline applied to features as they are read.

class ProcessingPipeline:
    def __init__(self):
        self.stages = []  # list of (name, callable)

    def add_stage(self, func, name=None):
        self.stages.append((name or getattr(func, "__name__", "stage"), func))
        return self

    @property
    def stage_names(self):
        return [name for name, _ in self.stages]

    def run(self, data):
        x = data
        for _, stage in self.stages:
            x = stage(x)
        return x

    def __len__(self):
        return len(self.stages)


# Named pipelines so the harness can configure preprocessing once and every
# Dataset built afterwards shares it. Use `get_pipeline(name)` to obtain a
# shared ProcessingPipeline instance (created on demand).
_PIPELINES = {}


def get_pipeline(name: str) -> ProcessingPipeline:
    """Return a ProcessingPipeline for `name`, creating it if necessary.

    Example:
        from app.processing.pipeline import get_pipeline
        get_pipeline('standardize').add_stage(transforms.channel_standardizer(mean, std))
    """
    if name not in _PIPELINES:
        _PIPELINES[name] = ProcessingPipeline()
    return _PIPELINES[name]


def clear_pipelines():
    """Clear all registered pipelines (useful for tests)."""
    _PIPELINES.clear()
