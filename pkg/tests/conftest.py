import hypothesis

hypothesis.settings.register_profile(
    "default",
    max_examples=40,
    derandomize=True,
    deadline=None,
)
hypothesis.settings.register_profile(
    "fast",
    max_examples=8,
    derandomize=True,
    deadline=None,
)
hypothesis.settings.load_profile("default")
