"""Small hand-wired networks used as fixed examples."""
from fractions import Fraction

from .model import MLP, Attention, AttentionHead, Network, Perceptron, TransformerLayer, frac_matrix, zeros


def relative_counting_attention() -> Attention:
    """Softmax head with all-zero logits; column 1 receives the mean of column 0."""
    head = AttentionHead(frac_matrix([[0], [0]]), frac_matrix([[0], [0]]), frac_matrix([[1], [0]]))
    return Attention([head], frac_matrix([[0, 1]]), "softmax")


def half_network() -> Network:
    """Accepts exactly when at least half of the vertices carry p0."""
    P = MLP.linear(frac_matrix([[1, 0]]))
    layer = TransformerLayer(relative_counting_attention(), MLP.linear(zeros(2, 2)))
    C = MLP([
        # 1 - H(1/2 - mean) is 1 iff mean >= 1/2
        Perceptron(frac_matrix([[0], [-1]]), frac_matrix([Fraction(1, 2)]), "heaviside"),
        Perceptron(frac_matrix([[-1]]), frac_matrix([1]), "relu"),
        Perceptron(frac_matrix([[1]]), frac_matrix([0]), "identity"),
    ])
    return Network("GT", 1, 2, P, [layer], C, "exact")


def uh_counterexample() -> Network:
    """Unique-hard GT whose output copies vertex 0's label onto every vertex."""
    head = AttentionHead(frac_matrix([[0]]), frac_matrix([[0]]), frac_matrix([[1]]))
    layer = TransformerLayer(Attention([head], frac_matrix([[1]]), "unique-hard"), MLP.linear(zeros(1, 1)))
    return Network("GT", 1, 1, MLP.linear(frac_matrix([[1]])), [layer],
                   MLP.linear(frac_matrix([[1]])), "exact")
