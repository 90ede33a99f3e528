import re
from typing import FrozenSet, List, Optional

# Unicode letters and digits; everything else (including "_") separates tokens.
TOKEN_PATTERN = re.compile(r"[^\W_]+")

ENGLISH_STOPWORDS: FrozenSet[str] = frozenset([
    'a', 'an', 'and', 'are', 'as', 'at', 'be', 'but', 'by', 'for', 'if', 'in',
    'into', 'is', 'it', 'no', 'not', 'of', 'on', 'or', 'such', 'that', 'the',
    'their', 'then', 'there', 'these', 'they', 'this', 'to', 'was', 'will', 'with'
])


def tokenize(text: str, stopwords: Optional[FrozenSet[str]] = None) -> List[str]:
    """Lowercase alphanumeric tokens of text, optionally dropping stopwords"""
    tokens = TOKEN_PATTERN.findall(text.lower())
    if stopwords:
        tokens = [t for t in tokens if t not in stopwords]
    return tokens
