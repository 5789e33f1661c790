"""Independent reference computations shared by the unit and acceptance tests."""

import itertools
import math

import numpy as np


def brute_bleu(cand, ref, max_n=4, eps=1e-9, weight=lambda g: 1.0):
    """Scalar BLEU by explicit substring enumeration and list counting."""
    if not cand:
        return 0.0
    logs = []
    for n in range(1, min(max_n, len(cand)) + 1):
        cand_grams = [tuple(cand[i : i + n]) for i in range(len(cand) - n + 1)]
        ref_grams = [tuple(ref[i : i + n]) for i in range(len(ref) - n + 1)]
        total = matched = 0.0
        for g in set(cand_grams):
            c = cand_grams.count(g)
            total += weight(g) * c
            matched += weight(g) * min(c, ref_grams.count(g))
        logs.append(math.log((matched or eps) / total))
    return math.exp(min(0.0, 1 - len(ref) / len(cand)) + sum(logs) / len(logs))


def all_sequences(alphabet="abc", max_len=6):
    return [list(p) for n in range(max_len + 1) for p in itertools.product(alphabet, repeat=n)]


class NgramMatrix:
    """Count vectors of every n-gram (n = 1..max_n) for a fixed list of sequences.

    Columns are grouped by order; an n-gram is indexed by its base-|alphabet|
    value. Clipped matches against many references become one ``np.minimum``.
    """

    def __init__(self, seqs, alphabet="abc", max_n=4):
        self.k = len(alphabet)
        self.max_n = max_n
        self.offsets = [0]
        for n in range(1, max_n + 1):
            self.offsets.append(self.offsets[-1] + self.k**n)
        digit = {a: i for i, a in enumerate(alphabet)}
        self.counts = np.zeros((len(seqs), self.offsets[-1]))
        for row, s in enumerate(seqs):
            for n in range(1, max_n + 1):
                for i in range(len(s) - n + 1):
                    code = 0
                    for t in s[i : i + n]:
                        code = code * self.k + digit[t]
                    self.counts[row, self.offsets[n - 1] + code] += 1
        self.lengths = np.array([len(s) for s in seqs], dtype=float)

    def bleu_against_all(self, row, eps=1e-9):
        """Oracle BLEU of sequence ``row`` as candidate against every sequence as reference."""
        c_len = self.lengths[row]
        if c_len == 0:
            return np.zeros(len(self.lengths))
        orders = int(min(self.max_n, c_len))
        log_sum = np.zeros(len(self.lengths))
        for n in range(1, orders + 1):
            lo, hi = self.offsets[n - 1], self.offsets[n]
            cand = self.counts[row, lo:hi]
            matched = np.minimum(self.counts[:, lo:hi], cand).sum(axis=1)
            total = cand.sum()
            log_sum += np.log(np.where(matched > 0, matched, eps) / total)
        bp = np.minimum(0.0, 1 - self.lengths / c_len)
        return np.exp(bp + log_sum / orders)
