"""Temporal annotated recurring sequences and the next-basket predictor built on them."""

from .data import Basket, Dataset, DataError, Item, PurchaseHistory, load_dataset, parse_transactions
from .estimation import FIXED_DEFAULT, ParameterTriple, estimate_parameters
from .mining import Tars, TarsSet, extract_tars, mine_dataset
from .occurrence import Sequence, detect_periods, minimal_occurrences
from .predictor import personalized_k, predict, predict_basket

__all__ = [
    "Basket", "Dataset", "DataError", "Item", "PurchaseHistory", "load_dataset", "parse_transactions",
    "FIXED_DEFAULT", "ParameterTriple", "estimate_parameters",
    "Tars", "TarsSet", "extract_tars", "mine_dataset",
    "Sequence", "detect_periods", "minimal_occurrences",
    "personalized_k", "predict", "predict_basket",
]
