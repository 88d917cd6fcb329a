try:
    from ._trenn import (
        canonical_tasks,
        counterfactual,
        expected_teamwork,
        logo_eval,
        predict,
        saliency,
        synth_dataset,
        teamwork_tasks,
        train,
        validate_dataset,
    )
except ImportError:  # in-place build: extension lives next to the build tree
    from _trenn import (
        canonical_tasks,
        counterfactual,
        expected_teamwork,
        logo_eval,
        predict,
        saliency,
        synth_dataset,
        teamwork_tasks,
        train,
        validate_dataset,
    )

__all__ = [
    "canonical_tasks",
    "counterfactual",
    "expected_teamwork",
    "logo_eval",
    "predict",
    "saliency",
    "synth_dataset",
    "teamwork_tasks",
    "train",
    "validate_dataset",
]
