"""Matplotlib figures rendered next to the delimited reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def save_eval_figure(report, path) -> None:
    """Per-transition engine error with the baseline mean as a red line."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    transitions = range(len(report.per_transition_error))
    ax.plot(transitions, report.per_transition_error, "o-", label="engine")
    ax.axhline(report.baseline_mean_error, color="red", label="baseline mean")
    ax.set_xlabel("transition")
    ax.set_ylabel("frame error")
    ax.set_ylim(bottom=0)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_elbow_figure(curve, selected_k: int, path) -> None:
    """Negative log-likelihood per mixture size, with the chosen k marked."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ks = range(1, len(curve) + 1)
    ax.plot(ks, curve, "bx-")
    ax.axvline(selected_k, color="red", linestyle="--", label=f"k = {selected_k}")
    ax.set_xlabel("number of clusters")
    ax.set_ylabel("negative log-likelihood")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
