"""Reference FSM interpreter used to cross-check FSM import plus simulation.

Deliberately shares nothing with :mod:`tmkit.fsm` or :mod:`tmkit.sim`: it
walks the transition table directly.
"""


class OracleError(ValueError):
    pass


def fsm_oracle_run(spec, word):
    """Return the state sequence visited on ``word``, starting with the initial state."""
    table = {}
    for src, sym, dst in spec.transitions:
        table[src, sym] = dst
    alphabet = set(spec.alphabet)
    current = spec.initial
    visited = [current]
    for sym in word:
        if sym not in alphabet:
            raise OracleError(f"unknown symbol {sym!r}")
        if (current, sym) not in table:
            raise OracleError(f"no transition from {current!r} on {sym!r}")
        current = table[current, sym]
        visited.append(current)
    return visited
