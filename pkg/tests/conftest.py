import sys

import pytest
import torch

torch.set_num_threads(1)

ETHER_STORE = """\
pragma solidity ^0.4.24;

contract EtherStore {
    uint256 public withdrawalLimit = 1 ether;
    mapping(address => uint256) public lastWithdrawTime;
    mapping(address => uint256) public balances;

    function depositFunds() public payable {
        balances[msg.sender] += msg.value;
    }

    function withdrawFunds(uint256 _weiToWithdraw) public {
        require(balances[msg.sender] >= _weiToWithdraw);
        require(_weiToWithdraw <= withdrawalLimit);
        require(now >= lastWithdrawTime[msg.sender] + 1 weeks);
        require(msg.sender.call.value(_weiToWithdraw)());
        balances[msg.sender] -= _weiToWithdraw;
        lastWithdrawTime[msg.sender] = now;
    }
}
"""

SIMPLE = """\
pragma solidity ^0.8.0;

/// @title Counter
contract Counter {
    uint256 public count; // running total

    /* bump it */
    function inc(uint256 by) public returns (uint256) {
        uint256 next = count + by;
        count = next;
        return next;
    }
}
"""


@pytest.fixture
def ether_store():
    return ETHER_STORE


@pytest.fixture
def simple_source():
    return SIMPLE


# filled by test_acceptance.py, echoed after the run so the lines survive output capture
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
