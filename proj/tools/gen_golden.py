#!/usr/bin/env python3
"""Writes tests/fixtures/golden.json: sample transactions and a block encoded by hand."""

import hashlib
import json
import struct
import sys
from pathlib import Path

from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

TAGS = {"GiveRightToRate": 0, "SetRate": 1, "GetRate": 2, "CreateProduct": 3, "Mint": 4}


def u8(v):
    return struct.pack(">B", v)


def u32(v):
    return struct.pack(">I", v)


def u64(v):
    return struct.pack(">Q", v)


def u128(v):
    return v.to_bytes(16, "big")


def blob(b):
    return u32(len(b)) + b


def key(seed):
    sk = Ed25519PrivateKey.from_private_bytes(seed)
    pk = sk.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
    return sk, pk, hashlib.sha256(pk).digest()[-20:]


def call_bytes(function, args):
    out = u8(TAGS[function])
    if function == "GiveRightToRate":
        out += bytes.fromhex(args["rater"][2:])
    elif function == "SetRate":
        out += bytes.fromhex(args["product"][2:]) + u8(args["value"])
    elif function == "GetRate":
        out += bytes.fromhex(args["product"][2:])
    elif function == "CreateProduct":
        out += bytes.fromhex(args["product"][2:]) + blob(args["name"].encode())
    return out


def make_tx(seed, nonce, to, function, args, value, gas_limit, gas_price):
    sk, pk, addr = key(seed)
    unsigned = (u64(nonce) + addr + bytes.fromhex(to[2:]) + call_bytes(function, args) + u128(value) +
                u64(gas_limit) + u128(gas_price))
    sig = sk.sign(unsigned)
    return {
        "seed": "0x" + seed.hex(),
        "nonce": nonce,
        "from": "0x" + addr.hex(),
        "to": to,
        "function": function,
        "args": args,
        "value": str(value),
        "gas_limit": gas_limit,
        "gas_price": str(gas_price),
        "public_key": "0x" + pk.hex(),
        "unsigned_hex": "0x" + unsigned.hex(),
        "hash": "0x" + hashlib.sha256(unsigned).hexdigest(),
        "signature": "0x" + sig.hex(),
        "signed_hex": "0x" + (unsigned + pk + sig).hex(),
    }


def main():
    contract = "0x" + "11" * 20
    product = "0x" + "22" * 20
    rater_seed = bytes(range(32))
    owner_seed = bytes(range(32, 64))
    txs = [
        make_tx(owner_seed, 0, contract, "GiveRightToRate", {"rater": "0x" + key(rater_seed)[2].hex()}, 0, 47800,
                2000000000),
        make_tx(owner_seed, 1, contract, "CreateProduct", {"product": product, "name": "Kaza Restaurant"}, 0, 53000,
                2000000000),
        make_tx(rater_seed, 0, contract, "SetRate", {"product": product, "value": 80}, 0, 100000, 2000000000),
        make_tx(rater_seed, 1, contract, "GetRate", {"product": product}, 12345678901234567890123, 42689, 1),
    ]

    psk, ppk, paddr = key(b"\x42" * 32)
    parent = hashlib.sha256(b"parent").digest()
    number, timestamp, out_of_turn, gas_limit = 1, 1700000000, 0, 6721975
    gas_used = 47800 + 53000 + 51456 + 42689
    body = u64(number) + parent + u64(timestamp) + paddr + u8(out_of_turn) + u64(gas_used) + u64(gas_limit)
    body += u32(len(txs)) + b"".join(blob(bytes.fromhex(t["signed_hex"][2:])) for t in txs)
    block_hash = hashlib.sha256(body).digest()
    block_sig = psk.sign(block_hash)
    block = {
        "proposer_seed": "0x" + (b"\x42" * 32).hex(),
        "number": number,
        "parent_hash": "0x" + parent.hex(),
        "timestamp": timestamp,
        "proposer": "0x" + paddr.hex(),
        "out_of_turn": bool(out_of_turn),
        "gas_used": gas_used,
        "gas_limit": gas_limit,
        "canonical_hex": "0x" + body.hex(),
        "block_hash": "0x" + block_hash.hex(),
        "proposer_key": "0x" + ppk.hex(),
        "proposer_signature": "0x" + block_sig.hex(),
        "encoded_hex": "0x" + (blob(body) + block_hash + ppk + block_sig).hex(),
    }

    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "tests/fixtures/golden.json"
    out.write_text(json.dumps({"transactions": txs, "block": block}, indent=2) + "\n")


if __name__ == "__main__":
    main()
