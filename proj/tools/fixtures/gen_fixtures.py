#!/usr/bin/env python3
"""Regenerates the frozen test fixtures under tests/data using python-chess.

python-chess is used only here, as an independent rules engine. The C++
tests compare against its output; they never import it.

    python3 tools/fixtures/gen_fixtures.py tests/data
"""
import json
import random
import sys
from pathlib import Path

import chess

HEADER = "PuzzleId,FEN,Moves,Rating,RatingDeviation,Popularity,NbPlays,Themes,GameUrl,OpeningTags"

PERFT_POSITIONS = [
    ("start", chess.STARTING_FEN, 4),
    ("kiwipete", "r3k2r/p1ppqpb1/bn2pnp1/3PN3/1p2P3/2N2Q1p/PPPBBPPP/R3K2R w KQkq - 0 1", 3),
    ("endgame-ep", "8/2p5/3p4/KP5r/1R3p1k/8/4P1P1/8 w - - 0 1", 4),
    ("promotion", "r3k2r/Pppp1ppp/1b3nbN/nP6/BBP1P3/q4N2/Pp1P2PP/R2Q1RK1 w kq - 0 1", 3),
    ("discovered", "rnbq1k1r/pp1Pbppp/2p5/8/2B5/8/PPP1NnPP/RNBQK2R w KQ - 1 8", 3),
    ("queen-endgame", "6k1/1r3p2/4p1p1/3pQ2p/3r3P/8/5PP1/6K1 w - - 2 35", 3),
]


def perft(board, depth):
    if depth == 0:
        return 1
    total = 0
    for mv in board.legal_moves:
        board.push(mv)
        total += perft(board, depth - 1)
        board.pop()
    return total


def classical_fen(board):
    # python-chess omits the ep square when no capture is legal; the
    # project records it after every double push.
    fen = board.fen(en_passant="fen")
    return fen


def random_game_positions(rng, count):
    out = []
    while len(out) < count:
        board = chess.Board()
        plies = rng.randint(1, 160)
        for _ in range(plies):
            moves = list(board.legal_moves)
            if not moves:
                break
            # Bias toward captures and promotions so late positions show up.
            tactical = [m for m in moves if board.is_capture(m) or m.promotion]
            mv = rng.choice(tactical) if tactical and rng.random() < 0.4 else rng.choice(moves)
            board.push(mv)
            if rng.random() < 0.08:
                out.append(board.copy())
        if len(out) < count:
            out.append(board.copy())
    return out[:count]


def make_puzzle(rng, idx):
    while True:
        board = chess.Board()
        for _ in range(rng.randint(12, 70)):
            moves = list(board.legal_moves)
            if not moves:
                break
            board.push(rng.choice(moves))
        if board.is_game_over():
            continue
        fen = classical_fen(board)
        line = []
        length = rng.choice([1, 3, 3, 5])
        setup = rng.choice(list(board.legal_moves))
        line.append(setup)
        board.push(setup)
        ok = True
        for _ in range(length):
            moves = list(board.legal_moves)
            if not moves:
                ok = False
                break
            tactical = [m for m in moves if board.is_capture(m) or board.gives_check(m)]
            mv = rng.choice(tactical) if tactical and rng.random() < 0.6 else rng.choice(moves)
            line.append(mv)
            board.push(mv)
        if not ok:
            continue
        rating = rng.randint(200, 2800)
        themes = rng.choice(["crushing hangingPiece middlegame short", "mate mateIn1 oneMove",
                             "advantage fork long", "endgame advantage short"])
        pid = f"fx{idx:04d}"
        return f"{pid},{fen},{' '.join(m.uci() for m in line)},{rating},75,90,1000,{themes},https://lichess.org/training/{pid},"


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "tests/data")
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(20251015)

    with open(out / "perft.jsonl", "w") as f:
        for name, fen, depth in PERFT_POSITIONS:
            board = chess.Board(fen)
            counts = [perft(board, d) for d in range(1, depth + 1)]
            f.write(json.dumps({"name": name, "fen": fen, "counts": counts}) + "\n")

    puzzles100 = [make_puzzle(rng, i) for i in range(100)]
    (out / "puzzles_100.csv").write_text(HEADER + "\n" + "\n".join(puzzles100) + "\n")
    (out / "puzzles_10.csv").write_text(HEADER + "\n" + "\n".join(puzzles100[:10]) + "\n")

    # Fault-injected file: one corrupted token, one out-of-range rating.
    bad = list(puzzles100[:6])
    fields = bad[2].split(",")
    toks = fields[2].split()
    toks[1] = "a1a1"
    fields[2] = " ".join(toks)
    bad[2] = ",".join(fields)
    fields = bad[4].split(",")
    fields[3] = "3100"
    bad[4] = ",".join(fields)
    (out / "puzzles_faulty.csv").write_text(HEADER + "\n" + "\n".join(bad) + "\n")

    # Notation fixture: puzzle replays plus random game positions.
    boards = []
    for row in puzzles100:
        fields = row.split(",")
        board = chess.Board(fields[1])
        boards.append(board.copy())
        for u in fields[2].split():
            board.push(chess.Move.from_uci(u))
            boards.append(board.copy())
    boards += random_game_positions(rng, 1000 - len(boards)) if len(boards) < 1000 else []
    boards = boards[:1000]
    with open(out / "notation_1000.jsonl", "w") as f:
        for board in boards:
            moves = sorted(([board.san(m), m.uci()] for m in board.legal_moves), key=lambda p: p[0].encode())
            f.write(json.dumps({"fen": classical_fen(board), "moves": moves}) + "\n")

    # Single-move successor FENs for apply_move cross-checks.
    with open(out / "successors.jsonl", "w") as f:
        for board in boards[::25]:
            for m in board.legal_moves:
                b = board.copy()
                b.push(m)
                f.write(json.dumps({"fen": classical_fen(board), "uci": m.uci(),
                                    "after": classical_fen(b)}) + "\n")


if __name__ == "__main__":
    main()
