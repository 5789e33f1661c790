"""Solidity lexing, tolerant parsing and CodeBLEU-oriented tree features."""

from .ast import ContractAst, Node
from .features import def_use_edges, function_def_use_edges, subtrees
from .lexer import ContractSource, Token, TokenStream, strip_comments, tokenize
from .parser import is_single_contract, parse

__all__ = [
    "ContractAst",
    "ContractSource",
    "Node",
    "Token",
    "TokenStream",
    "def_use_edges",
    "function_def_use_edges",
    "is_single_contract",
    "parse",
    "strip_comments",
    "subtrees",
    "tokenize",
]
