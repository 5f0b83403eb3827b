"""Decision trees for noisy numeric data: C4.5-style induction plus soft split
search, soft training propagation and soft evaluation."""

from .core_data import (DataError, Dataset, RngStream, WeightedIndexSet, add_gaussian_noise,
                        load_csv, stratified_folds, stratified_split, write_csv)
from .inference import EvalConfig, accuracy, classify, classify_many, predict_proba, predict_proba_many
from .model import Model
from .pruning import (PruneConfig, calibrate_confidence_for_target_leaves, clopper_pearson_upper,
                      ebp_prune)
from .split_search import (SoftSearchConfig, SplitCandidate, best_split_all_attributes,
                           candidate_grid, hard_best_split, soft_best_split,
                           soft_density_increments)
from .tree_induction import (GrowConfig, Internal, Leaf, TreeGrower, dump_tree, grow_tree,
                             load_tree, tree_depth, tree_leaf_count)
from .udt_baseline import UdtConfig, train_udt

__version__ = "0.1.0"
