"""Embeddings of hierarchical graphs in complex hyperbolic space."""

from .evaluation import (
    EvalReport,
    RankingTask,
    bucketed_1n_report,
    evaluate,
    hits_at_n,
    map_score,
    mrr_score,
    rank_neighbors,
)
from .geometry import (
    OutsideBallError,
    ball_norm_sq,
    distance,
    hermitian_form,
    klein_real_distance,
    metric_scale,
    poincare_line_distance,
)
from .gradients import SingularGradientError, distance_partials, finite_difference_oracle, riemannian_gradient
from .graphs import (
    Graph,
    SplitSpec,
    balanced_tree,
    compressed_graph,
    delta_hyperbolicity,
    load_edge_list,
    split_edges,
    transitive_closure,
)
from .model import (
    EmbeddingTable,
    LossBatch,
    TrainConfig,
    init_embeddings,
    load_checkpoint,
    loss_distance_partials,
    project,
    rsgd_step,
    save_checkpoint,
    soft_ranking_loss,
    train,
)
from .poincare import poincare_distance, poincare_rsgd_train

__version__ = "0.1.0"
