"""End-to-end checks for the account fixture."""

import storage
from account import BankAccount, transfer, open_accounts, LEDGER
from report import statement, deposit_volume, busiest_account

storage.reset()

alice = BankAccount("alice", 100)
bob = BankAccount("bob")

assert alice.deposit(50) == 150
assert alice.withdraw(30) == 120
assert bob.deposit(10) == 10
assert storage.load("alice") == 120
assert storage.load("bob") == 10

a_bal, b_bal = transfer(alice, bob, 20)
assert a_bal == 100
assert b_bal == 30

try:
    alice.withdraw(10_000)
except ValueError:
    pass
else:
    raise AssertionError("overdraft must raise")

try:
    bob.deposit(-5)
except ValueError:
    pass
else:
    raise AssertionError("negative deposit must raise")

accounts = open_accounts(["carol", "dave"], 5)
assert accounts["carol"].balance == 5
assert accounts["dave"].display_balance() == "dave: 5"

text = statement(["alice", "bob", "carol"])
assert "alice" in text
assert text.index("alice") < text.index("bob") < text.index("carol")

assert deposit_volume() == 50 + 10 + 20
assert busiest_account(["alice", "bob", "carol"]) == "alice"
assert LEDGER.volume() > 0

print("bank fixture: ok")
