import numpy as np
import pytest

from conftest import small_random_net
from ijgp.errors import ParseError
from ijgp.network import (
    BeliefNetwork,
    brute_force_posterior,
    moral_graph,
    parse_evidence,
    parse_network,
    serialize_evidence,
    serialize_network,
    validate,
)


def test_round_trip_is_exact():
    for seed in range(5):
        net = small_random_net(seed, n=9, k=3).network
        again = parse_network(serialize_network(net))
        assert again == net
        assert serialize_network(again) == serialize_network(net)


def test_generated_networks_validate():
    assert validate(small_random_net(1).network) == []


def test_two_cycle_gives_one_violation():
    net = BeliefNetwork.from_tables([2, 2], [(1,), (0,)], [[[0.5, 0.5]] * 2] * 2)
    problems = validate(net)
    assert len(problems) == 1 and "cycle" in problems[0]


def test_unnormalized_cpt_reported():
    net = BeliefNetwork.from_tables([2, 2], [(), (0,)], [[0.5, 0.5], [[0.9, 0.2], [0.5, 0.5]]])
    problems = validate(net)
    assert len(problems) == 1 and "variable 1" in problems[0]


def test_bayes_rule_by_hand(two_node_net):
    post = brute_force_posterior(two_node_net, {1: 1})
    # P(a=0 | b=1) = 0.3*0.1 / (0.3*0.1 + 0.7*0.8)
    np.testing.assert_allclose(post[0].table, [0.03 / 0.59, 0.56 / 0.59], rtol=1e-14)
    assert 1 not in post
    prior = brute_force_posterior(two_node_net)
    np.testing.assert_allclose(prior[1].table, [0.3 * 0.9 + 0.7 * 0.2, 0.3 * 0.1 + 0.7 * 0.8])


def test_moral_graph_marries_parents():
    net = BeliefNetwork.from_tables(
        [2, 2, 2], [(), (), (0, 1)], [[0.5, 0.5], [0.5, 0.5], np.full((2, 2, 2), 0.5)]
    )
    assert moral_graph(net) == {0: {1, 2}, 1: {0, 2}, 2: {0, 1}}


def test_file_order_puts_child_last():
    text = """BAYES
2
2 2
2
1 0
2 0 1
2
0.3 0.7
4
0.9 0.1 0.2 0.8
"""
    net = parse_network(text)
    np.testing.assert_allclose(net.cpt_table(1), [[0.9, 0.1], [0.2, 0.8]])
    assert validate(net) == []


def test_higher_index_parent_is_transposed_on_load():
    # variable 0 has parent 1; the table lists parent values outermost
    text = "BAYES\n2\n2 3\n2\n2 1 0\n1 1\n6\n0.1 0.9 0.4 0.6 0.7 0.3\n3\n0.2 0.3 0.5\n"
    net = parse_network(text)
    assert net.parents == ((1,), ())
    assert net.cpts[0].vars == (0, 1)
    np.testing.assert_allclose(net.cpt_table(0), [[0.1, 0.9], [0.4, 0.6], [0.7, 0.3]])
    np.testing.assert_allclose(net.cpts[0].table, [[0.1, 0.4, 0.7], [0.9, 0.6, 0.3]])
    assert parse_network(serialize_network(net)) == net


def test_parse_errors_carry_line_numbers():
    bad = "BAYES\n2\n2 2\n2\n1 0\n2 0 1\n2\n0.3 oops\n"
    with pytest.raises(ParseError) as info:
        parse_network(bad)
    assert info.value.line == 8 and "line 8" in str(info.value)
    with pytest.raises(ParseError):
        parse_network("MARKOV\n0\n")
    with pytest.raises(ParseError):
        parse_network("BAYES\n1\n2\n1\n1 0\n3\n0.5 0.5 0.5\n")


def test_evidence_round_trip():
    ev = {3: 1, 0: 0}
    assert parse_evidence(serialize_evidence(ev)) == ev
    with pytest.raises(ParseError):
        parse_evidence("2\n0 1\n")
