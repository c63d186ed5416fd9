"""Sound separation dataset, loss and metric primitives backed by a C++ core."""

from ._fusskit import (
    FussError,
    RoomSpec,
    SiSnrDiagnostics,
    evaluate_example,
    image_method_rir,
    loss_inactive,
    loss_inactive_gradient,
    loss_snr,
    loss_snr_gradient,
    measure_t60,
    mixture_consistency,
    overlap_stats,
    pit_loss,
    read_wav,
    sample_room,
    si_snr_scaled,
    si_snr_stabilized,
    write_wav,
)

__all__ = [
    "FussError",
    "RoomSpec",
    "SiSnrDiagnostics",
    "evaluate_example",
    "image_method_rir",
    "loss_inactive",
    "loss_inactive_gradient",
    "loss_snr",
    "loss_snr_gradient",
    "measure_t60",
    "mixture_consistency",
    "overlap_stats",
    "pit_loss",
    "read_wav",
    "sample_room",
    "si_snr_scaled",
    "si_snr_stabilized",
    "write_wav",
]
