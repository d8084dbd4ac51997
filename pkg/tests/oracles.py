"""Independent straight-line oracles used to check the library's math.

Everything here is deliberately written with plain Python loops and the
math module (no torch, no shared code with the package) so a test compares
two genuinely different routes to the same value.
"""

import math


def gelu(x: float) -> float:
    return 0.5 * x * (1.0 + math.erf(x / math.sqrt(2.0)))


def adapter_oracle(x, w_d, w_u):
    """x + W_u @ gelu(W_d @ x), element by element."""
    c = len(x)
    c_b = len(w_d)
    hidden = []
    for i in range(c_b):
        acc = 0.0
        for j in range(c):
            acc += w_d[i][j] * x[j]
        hidden.append(gelu(acc))
    out = []
    for i in range(c):
        acc = x[i]
        for j in range(c_b):
            acc += w_u[i][j] * hidden[j]
        out.append(acc)
    return out


def matmul_oracle(a, b):
    n, k = len(a), len(a[0])
    m = len(b[0])
    out = [[0.0] * m for _ in range(n)]
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for t in range(k):
                acc += a[i][t] * b[t][j]
            out[i][j] = acc
    return out


def mix_oracle(x, w_tm, w_cm):
    """W_tm @ x @ W_cm via two explicit matrix products."""
    return matmul_oracle(matmul_oracle(w_tm, x), w_cm)


def cosine_sum_oracle(a, b):
    """Sum over rows of dot(a_i, b_i) / (|a_i| * |b_i|)."""
    total = 0.0
    for row_a, row_b in zip(a, b):
        dot = sum(x * y for x, y in zip(row_a, row_b))
        norm_a = math.sqrt(sum(x * x for x in row_a))
        norm_b = math.sqrt(sum(y * y for y in row_b))
        total += dot / (norm_a * norm_b)
    return total


def softmax_ce_oracle(matrix, temperature=1.0):
    """-(1/n) sum_i log(exp(m_ii/t) / sum_j exp(m_ij/t)), no stabilization."""
    n = len(matrix)
    total = 0.0
    for i in range(n):
        numerator = math.exp(matrix[i][i] / temperature)
        denominator = sum(math.exp(matrix[i][j] / temperature) for j in range(n))
        total += -math.log(numerator / denominator)
    return total / n


def tokenize_oracle(text):
    tokens = []
    current = []
    for ch in text.lower():
        if ch.isalnum():
            current.append(ch)
        elif current:
            tokens.append("".join(current))
            current = []
    if current:
        tokens.append("".join(current))
    return tokens


def statistics_oracle(rows):
    """Recount dataset statistics from raw triplet dicts."""
    images = set()
    mod_vocab = set()
    mod_tokens = 0
    captions = {}
    for row in rows:
        images.add(row["reference_id"])
        images.add(row["target_id"])
        tokens = tokenize_oracle(row["modification_text"])
        mod_vocab.update(tokens)
        mod_tokens += len(tokens)
        if row.get("reference_caption"):
            captions[row["reference_id"]] = row["reference_caption"]
        if row.get("target_caption"):
            captions[row["target_id"]] = row["target_caption"]
    cap_vocab = set()
    cap_tokens = 0
    for caption in captions.values():
        tokens = tokenize_oracle(caption)
        cap_vocab.update(tokens)
        cap_tokens += len(tokens)
    n = len(rows)
    return {
        "triplet_count": n,
        "unique_images": len(images),
        "modification_vocab_size": len(mod_vocab),
        "modification_avg_tokens": mod_tokens / n if n else 0.0,
        "caption_vocab_size": len(cap_vocab),
        "caption_avg_tokens": cap_tokens / len(captions) if captions else 0.0,
    }


def mean_std_oracle(values):
    """Mean and population standard deviation."""
    n = len(values)
    mean = sum(values) / n
    variance = sum((v - mean) ** 2 for v in values) / n
    return mean, math.sqrt(variance)
