"""Contract-QA dataset compilation over knowledge graphs, unlearning metrics,
and a desk-scale unlearning simulator."""

from .compiler import (CompiledDataset, ForgetSplit, compile_dataset, export_dataset,
                       export_split, import_dataset, recompile_from_manifest,
                       sample_forget_edge, split_forget)
from .contracts import (AttributeSchema, ContractRecord, QAPair, fill_contract,
                        render_contract_text, render_qa, schema)
from .entities import (EntityProfile, Seed, TermValue, child_rng, child_seed,
                       gen_address, gen_company_name, gen_person_name, gen_term,
                       gen_unique_profiles)
from .graphs import (ContractDomain, Edge, KnowledgeGraph, NodeKind, TopologySpec,
                     build_chain, build_complete, build_dataset1, build_dataset2,
                     build_semi_dense, edge_interconnectivity)
from .losses import loss_dpo, loss_ga, loss_gd, loss_npo, loss_ukl
from .metrics import (GenerationRecord, MetricReport, RankRecord, aggregate,
                      deviation_score, mrr, rouge1_recall, thr, tokenize)
from .model import ToyMemorizer
from .unlearn import (DEFAULT_IDK_ANSWERS, DEFAULT_LR_GRID, SimResult, TrainConfig,
                      UnlearnMethod, grad_check, memorize, memorize_config,
                      run_unlearning, sweep_learning_rate)

__version__ = "0.1.0"
