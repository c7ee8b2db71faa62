"""Gaussian shape/color overlays, decomposed color features and per-query
logistic-regression screening models."""
from .colorff import ColorAtom, ColorType, assign_color_atoms, color_atoms_for, load_annotated_color_atoms, perceive_rings
from .evaluation import auc, roc_auc, roc_curve, roc_enrichment, sign_test_ci, stratified_kfold, wilson_interval
from .features import (LAYOUTS, SimilarityConfig, build_feature_vector, color_atom_overlaps, color_components,
                       combo_score, ref_tversky, tanimoto)
from .model import LRModel, export_weights, predict_proba, train_lr, tune_C
from .molio import Atom, Bond, DatasetManifest, Molecule, assign_radii, load_manifest, parse_sdf, read_sdf, write_sdf
from .overlay import (GaussianSphere, OverlayConfig, OverlayResult, Transform, best_overlay, color_overlap,
                      molecule_overlap, overlap_gradient, pair_overlap, prepare)

__version__ = "0.1.0"
