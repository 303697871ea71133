"""Independent brute-force reference for the whole prediction pipeline.

Pure-Python lists and ``math`` only; no numpy and no code shared with the
package. Given the same inputs (including the drawn negative sample
indices, which are sampling plumbing rather than pipeline math), this
recomputes every stream, fusion, and the final argmax from scratch.
"""

import math


def _norm(v):
    return math.sqrt(sum(x * x for x in v))


def _scaled_unit(v, scale):
    n = _norm(v)
    return [x / n * scale for x in v]


def _exp_map(w):
    n = _norm(w)
    if n == 0.0:
        return list(w)
    factor = math.tanh(n) / n
    return [factor * x for x in w]


def _poincare_distance(a, b):
    diff_sq = sum((x - y) ** 2 for x, y in zip(a, b))
    denom = (1.0 - sum(x * x for x in a)) * (1.0 - sum(y * y for y in b))
    return math.acosh(1.0 + 2.0 * diff_sq / denom)


def _cosine(a, b):
    return sum(x * y for x, y in zip(a, b)) / (_norm(a) * _norm(b))


def _softmax(logits):
    exps = [math.exp(x) for x in logits]
    total = sum(exps)
    return [e / total for e in exps]


def _mean(rows):
    count = len(rows)
    return [sum(col) / count for col in zip(*rows)]


def naive_classify(
    test_feature,
    support_features,
    support_labels,
    class_count,
    text_positive,
    text_negative,
    negative_picks,
    components,
    alpha,
    epsilon,
    tau,
    scale,
):
    """Final scores and argmax for one test feature.

    ``negative_picks[k]`` lists the support row drawn for each other class
    when building class k's negative prototype.
    """
    prepped = {
        i: _scaled_unit(f, scale) for i, f in enumerate(support_features)
    }

    positives = []
    for k in range(class_count):
        rows = [prepped[i] for i, lab in enumerate(support_labels) if lab == k]
        positives.append(_exp_map(_mean(rows)))

    negatives = []
    for k in range(class_count):
        mapped = [_exp_map(prepped[i]) for i in negative_picks[k]]
        negatives.append(_mean(mapped))

    h_test = _exp_map(_scaled_unit(test_feature, scale))

    image_streams = []
    if "iip+" in components:
        image_streams.append(
            _softmax([-epsilon * _poincare_distance(h_test, p) for p in positives])
        )
    if "iip-" in components:
        image_streams.append(
            _softmax([epsilon * _poincare_distance(h_test, n) for n in negatives])
        )
    text_streams = []
    if "itp+" in components:
        text_streams.append(
            _softmax([_cosine(test_feature, t) / tau for t in text_positive])
        )
    if "itp-" in components:
        text_streams.append(
            _softmax([-_cosine(test_feature, t) / tau for t in text_negative])
        )

    def branch(streams):
        if not streams:
            return None
        if len(streams) == 1:
            return streams[0]
        return [a + b for a, b in zip(streams[0], streams[1])]

    p_ii = branch(image_streams)
    p_it = branch(text_streams)
    if p_ii is not None and p_it is not None:
        final = [alpha * a + b for a, b in zip(p_ii, p_it)]
    else:
        final = p_ii if p_ii is not None else p_it

    best = 0
    for k in range(1, class_count):
        if final[k] > final[best]:
            best = k
    return best, final
