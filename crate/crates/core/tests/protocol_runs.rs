//! End-to-end protocol runs: circuit rounds standalone and dual, the
//! oracle round standalone and dual, the multi-round composer against the
//! reference executor, transcript replay, views, and the TCP transport.

use std::net::TcpListener;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use sfe_core::bits::{bits_to_bytes, bits_to_u64, bytes_to_bits, u64_to_bits};
use sfe_core::circuit::build::{gen_millionaires, gen_select, index_width, CircuitBuilder};
use sfe_core::circuit::WireId;
use sfe_core::partition::{
    exec_reference, make_identity, EvenRound, OddFn, OddRound, PartitionScheme, PlainFn,
    RoundSpec,
};
use sfe_core::protocol::{
    derive_seed, run_gc_local, run_hyb_local, run_local, run_tcp, setup_oracle, view_of, CoinRng,
    FrameKind, GcAlice, HybAlice, HybBob, PartyProc, ProtocolError, Role,
};
use sfe_core::symenc::SymKey;
use sfe_core::Circuit;

fn contains_subslice(hay: &[u8], needle: &[u8]) -> bool {
    !needle.is_empty() && hay.windows(needle.len()).any(|w| w == needle)
}

fn and_circuit() -> Arc<Circuit> {
    let mut cb = CircuitBuilder::new(1, 1);
    let a = cb.alice_wires()[0];
    let b = cb.bob_wires()[0];
    let out = cb.and(a, b);
    Arc::new(cb.finish(vec![out]))
}

#[test]
fn and_circuit_round_matches_truth_table() {
    let circuit = and_circuit();
    for (i, (x, y)) in
        [(false, false), (false, true), (true, false), (true, true)].iter().enumerate()
    {
        let run = run_gc_local(&circuit, 80, false, &[*x], &[*y], i as u64).unwrap();
        assert_eq!(run.y0, vec![*x && *y], "inputs {x}/{y}");
        assert!(run.y1.is_empty(), "evaluator output stays empty in a plain round");
    }
}

#[test]
fn comparison_round_delivers_verdict_to_garbler() {
    let circuit = Arc::new(gen_millionaires(8));
    let a = u64_to_bits(200, 8);
    let b = u64_to_bits(100, 8);
    let run = run_gc_local(&circuit, 80, false, &a, &b, 3).unwrap();
    assert_eq!(run.y0, vec![true]);
    assert!(run.y1.is_empty());
    // Flipped inputs and equality, with the longer token length.
    let run = run_gc_local(&circuit, 128, false, &b, &a, 4).unwrap();
    assert_eq!(run.y0, vec![false]);
    let run = run_gc_local(&circuit, 80, false, &a, &a, 5).unwrap();
    assert_eq!(run.y0, vec![false]);
}

#[test]
fn lookup_round_reveals_only_the_chosen_entry() {
    let circuit = Arc::new(gen_select(4, 64));
    let table = [10u64, 20, 30, 40];
    let mut a = Vec::new();
    for v in table {
        a.extend(u64_to_bits(v, 64));
    }
    let b = u64_to_bits(2, index_width(4));
    let run = run_gc_local(&circuit, 80, false, &a, &b, 9).unwrap();
    assert_eq!(bits_to_u64(&run.y0), 30);
}

#[test]
fn dual_round_delivers_the_same_value_to_the_evaluator() {
    let circuit = Arc::new(gen_millionaires(8));
    let a = u64_to_bits(200, 8);
    let b = u64_to_bits(100, 8);
    let plain = run_gc_local(&circuit, 80, false, &a, &b, 7).unwrap();
    let dual = run_gc_local(&circuit, 80, true, &a, &b, 7).unwrap();
    // Same seed, same coins: the identical value lands on the other side.
    assert!(dual.y0.is_empty());
    assert_eq!(dual.y1, plain.y0);
    // The dual run publishes the decode table and gets nothing back.
    let kinds: Vec<FrameKind> =
        dual.transcript.messages.iter().map(|m| m.frame.kind).collect();
    assert!(kinds.contains(&FrameKind::GcDecode));
    assert!(!kinds.contains(&FrameKind::GcOutTokens));
}

#[test]
fn evaluator_input_never_appears_on_the_wire() {
    let circuit = Arc::new(gen_millionaires(128));
    let mut rng = ChaCha20Rng::seed_from_u64(99);
    for trial in 0..4u64 {
        let a: Vec<bool> = (0..128).map(|_| rng.gen()).collect();
        let b: Vec<bool> = (0..128).map(|_| rng.gen()).collect();
        let b_bytes = bits_to_bytes(&b);
        for dual in [false, true] {
            let run = run_gc_local(&circuit, 80, dual, &a, &b, 3000 + trial).unwrap();
            let wire = run.transcript.message_payloads();
            assert!(
                !contains_subslice(&wire, &b_bytes),
                "second party's input visible on the wire (trial {trial}, dual {dual})"
            );
        }
    }
}

#[test]
fn oracle_round_echo_returns_peer_input_to_the_first_party() {
    let echo: PlainFn = Arc::new(|_a, b| (b.to_vec(), Vec::new()));
    let scheme = Arc::new(make_identity("echo", echo, false));
    let a = bytes_to_bits(&[1, 2]);
    let b = bytes_to_bits(&[9, 8, 7]);
    let (run, _oracle) = run_hyb_local(&scheme, 80, &a, &b, 17).unwrap();
    assert_eq!(bits_to_bytes(&run.y0), vec![9, 8, 7]);
    assert!(run.y1.is_empty());
    // One message total: the sealed input. The second party receives
    // nothing, so his view is his input and coins alone.
    assert_eq!(run.transcript.messages.len(), 1);
    assert_eq!(run.transcript.messages[0].frame.kind, FrameKind::SgxCipher);
    let vb = view_of(&run.transcript, Role::Bob);
    assert!(vb.messages.is_empty());
    assert!(vb.oracle_log.is_empty());
}

#[test]
fn first_party_view_excludes_key_and_peer_input() {
    let equal: PlainFn = Arc::new(|a, b| (vec![u8::from(a == b)], Vec::new()));
    let scheme = Arc::new(make_identity("equal", equal, false));
    let mut rng = ChaCha20Rng::seed_from_u64(123);
    for trial in 0..3u64 {
        let seed = 500 + trial;
        let mut a_bytes = [0u8; 16];
        let mut b_bytes = [0u8; 16];
        rng.fill(&mut a_bytes);
        rng.fill(&mut b_bytes);
        let (run, _oracle) =
            run_hyb_local(&scheme, 80, &bytes_to_bits(&a_bytes), &bytes_to_bits(&b_bytes), seed)
                .unwrap();
        assert_eq!(bits_to_u64(&run.y0), 0, "distinct random inputs compare unequal");
        // Reconstruct the long-term key the same way setup derived it.
        let key = SymKey::random(&mut ChaCha20Rng::seed_from_u64(derive_seed(seed, 0)));
        let va = view_of(&run.transcript, Role::Alice).to_bytes();
        assert!(!contains_subslice(&va, &key.0), "long-term key visible to the first party");
        assert!(!contains_subslice(&va, &b_bytes), "peer input visible to the first party");
    }
}

/// One dual oracle round: the second party's byte selects from a fixed
/// table, and the value goes back to him sealed.
fn dual_select_scheme() -> PartitionScheme {
    let f: OddFn = Arc::new(|_u, v, _st| {
        let table = [10u64, 20, 30, 40];
        let idx = v[0] as usize;
        if idx >= table.len() {
            return Err(sfe_core::EnclaveError::BadInput("index out of range".into()));
        }
        Ok((Vec::new(), table[idx].to_be_bytes().to_vec()))
    });
    make_identity_odd_dual("dual_select", f)
}

/// A one-round scheme whose single stateful round is dual.
fn make_identity_odd_dual(name: &str, f: OddFn) -> PartitionScheme {
    PartitionScheme::new(
        name,
        vec![RoundSpec::Odd(OddRound { f_id: name.to_string(), f, dual: true })],
        Box::new(|a, _| vec![a.to_vec()]),
        Box::new(|b, _| vec![b.to_vec()]),
    )
}

#[test]
fn dual_oracle_round_delivers_sealed_value_to_the_second_party() {
    let scheme = Arc::new(dual_select_scheme());
    let a: Vec<bool> = Vec::new();
    let b = bytes_to_bits(&[1]);
    let (run, _oracle) = run_hyb_local(&scheme, 80, &a, &b, 31).unwrap();
    assert!(run.y0.is_empty());
    assert_eq!(bits_to_u64(&run.y1), 20);
    // The first party saw only the sealed reply, never the value.
    let rec = &run.transcript.oracle_log[0];
    assert!(rec.y_alice.is_empty());
    let sealed = rec.y_bob_sealed.as_ref().unwrap();
    assert!(!contains_subslice(sealed, &20u64.to_be_bytes()));
    // Two messages: ciphertext in, sealed reply out.
    let kinds: Vec<FrameKind> = run.transcript.messages.iter().map(|m| m.frame.kind).collect();
    assert_eq!(kinds, vec![FrameKind::SgxCipher, FrameKind::SgxReply]);
}

#[test]
fn tampered_relay_fails_authentication() {
    let scheme = Arc::new(dual_select_scheme());
    let (oracle, key) = setup_oracle(&scheme, 5).unwrap();
    let mut alice =
        HybAlice::new(scheme.clone(), oracle, 80, &[], CoinRng::new(5, Role::Alice)).unwrap();
    let mut bob = HybBob::new(
        scheme.clone(),
        key,
        80,
        &bytes_to_bits(&[2]),
        CoinRng::new(5, Role::Bob),
    )
    .unwrap();
    assert!(alice.step(None).unwrap().is_empty());
    let mut opening = bob.step(None).unwrap();
    assert_eq!(opening.len(), 1);
    let mut reply = alice.step(Some(opening.remove(0))).unwrap();
    assert_eq!(reply.len(), 1);
    let mut forged = reply.remove(0);
    assert_eq!(forged.kind, FrameKind::SgxReply);
    forged.payload[5] ^= 1;
    let err = bob.step(Some(forged)).unwrap_err();
    assert!(matches!(err, ProtocolError::Auth { round: 1 }), "got {err:?}");
}

#[test]
fn empty_dual_reply_round_trips() {
    let silent: OddFn = Arc::new(|_u, _v, _st| Ok((Vec::new(), Vec::new())));
    let scheme = Arc::new(make_identity_odd_dual("silent", silent));
    let (run, _oracle) = run_hyb_local(&scheme, 80, &[], &bytes_to_bits(&[0]), 8).unwrap();
    assert!(run.y0.is_empty());
    assert!(run.y1.is_empty());
}

#[test]
fn final_round_refuses_to_deliver_outputs_to_both_parties() {
    let both: OddFn = Arc::new(|u, v, _st| Ok((u.to_vec(), v.to_vec())));
    let scheme = Arc::new(make_identity_odd_dual("both", both));
    let err = run_hyb_local(&scheme, 80, &bytes_to_bits(&[1]), &bytes_to_bits(&[2]), 8)
        .err()
        .expect("mixed finals must be refused");
    assert!(matches!(err, ProtocolError::MixedOutputs), "got {err:?}");
}

/// Two-round chain: the oracle adds the parties' first bytes, then a
/// circuit adds the carried sum to the first party's second byte and masks
/// with the second party's second byte.
fn chain_scheme(dual_final: bool) -> PartitionScheme {
    let f1: OddFn = Arc::new(|u, v, _st| Ok((vec![u[0].wrapping_add(v[0])], Vec::new())));
    let mut cb = CircuitBuilder::new(16, 8);
    let aw = cb.alice_wires();
    let bw = cb.bob_wires();
    let sum = cb.add_word(&aw[0..8], &aw[8..16]);
    let out: Vec<WireId> = sum.iter().zip(&bw).map(|(&s, &b)| cb.xor(s, b)).collect();
    let circuit = Arc::new(cb.finish(out));
    PartitionScheme::new(
        "chain",
        vec![
            RoundSpec::Odd(OddRound { f_id: "chain_r1".into(), f: f1, dual: false }),
            RoundSpec::Even(EvenRound { circuit, dual: dual_final }),
        ],
        Box::new(|a, _| vec![a[..8].to_vec(), a[8..].to_vec()]),
        Box::new(|b, _| vec![b[..8].to_vec(), b[8..].to_vec()]),
    )
}

#[test]
fn composer_matches_the_reference_executor() {
    for dual_final in [false, true] {
        let scheme = Arc::new(chain_scheme(dual_final));
        let mut rng = ChaCha20Rng::seed_from_u64(777);
        for seed in 0..10u64 {
            let a: Vec<bool> = (0..16).map(|_| rng.gen()).collect();
            let b: Vec<bool> = (0..16).map(|_| rng.gen()).collect();
            let expect = exec_reference(&scheme, &a, &b, &mut rng).unwrap();
            let (got, _oracle) = run_hyb_local(&scheme, 80, &a, &b, seed).unwrap();
            let (e0, e1) = expect.final_outputs();
            assert_eq!(got.y0, e0, "first-party output, seed {seed}, dual {dual_final}");
            assert_eq!(got.y1, e1, "second-party output, seed {seed}, dual {dual_final}");
        }
    }
}

#[test]
fn composer_run_emits_rounds_in_order_and_views_partition_the_log() {
    let scheme = Arc::new(chain_scheme(true));
    let a = bytes_to_bits(&[5, 6]);
    let b = bytes_to_bits(&[7, 8]);
    let (run, _oracle) = run_hyb_local(&scheme, 80, &a, &b, 40).unwrap();
    let t = &run.transcript;
    // Stateful-round traffic from the second party is sealed ciphertext
    // frames and nothing else.
    for m in &t.messages {
        if m.sender == Role::Bob && m.frame.round % 2 == 1 {
            assert_eq!(m.frame.kind, FrameKind::SgxCipher);
        }
    }
    // Round tags never decrease.
    let rounds: Vec<u16> = t.messages.iter().map(|m| m.frame.round).collect();
    assert!(rounds.windows(2).all(|w| w[0] <= w[1]), "rounds out of order: {rounds:?}");
    // The two views split the log exactly: each frame lands with its
    // receiver, in order.
    let va = view_of(t, Role::Alice);
    let vb = view_of(t, Role::Bob);
    assert_eq!(va.messages.len() + vb.messages.len(), t.messages.len());
    let bob_sent: Vec<_> =
        t.messages.iter().filter(|m| m.sender == Role::Bob).map(|m| m.frame.clone()).collect();
    let alice_sent: Vec<_> =
        t.messages.iter().filter(|m| m.sender == Role::Alice).map(|m| m.frame.clone()).collect();
    assert_eq!(va.messages, bob_sent);
    assert_eq!(vb.messages, alice_sent);
    assert_eq!(va.oracle_log.len(), 1);
}

#[test]
fn replay_of_logged_coins_reproduces_the_run() {
    // Circuit-round protocol.
    let circuit = Arc::new(gen_millionaires(8));
    let a = u64_to_bits(150, 8);
    let b = u64_to_bits(90, 8);
    let base = run_gc_local(&circuit, 80, false, &a, &b, 11).unwrap();
    let mut alice = GcAlice::new(
        circuit.clone(),
        80,
        a.clone(),
        false,
        1,
        CoinRng::replay(base.transcript.alice_coins.clone()),
    );
    let mut bob = sfe_core::protocol::GcBob::new(
        circuit.clone(),
        80,
        b.clone(),
        false,
        1,
        CoinRng::replay(base.transcript.bob_coins.clone()),
    );
    let replayed = run_local("gc", 80, 11, &a, &b, &mut alice, &mut bob).unwrap();
    assert_eq!(replayed.transcript.to_bytes(), base.transcript.to_bytes());
    assert_eq!(replayed.y0, base.y0);

    // Composed protocol: the oracle's sealing nonces re-derive from the
    // provisioning seed, so replaying both coin logs rebuilds the full
    // transcript byte for byte.
    let scheme = Arc::new(chain_scheme(true));
    let a = bytes_to_bits(&[3, 200]);
    let b = bytes_to_bits(&[250, 17]);
    let (base, _oracle) = run_hyb_local(&scheme, 80, &a, &b, 13).unwrap();
    let (oracle, key) = setup_oracle(&scheme, 13).unwrap();
    let mut alice = HybAlice::new(
        scheme.clone(),
        oracle,
        80,
        &a,
        CoinRng::replay(base.transcript.alice_coins.clone()),
    )
    .unwrap();
    let mut bob = HybBob::new(
        scheme.clone(),
        key,
        80,
        &b,
        CoinRng::replay(base.transcript.bob_coins.clone()),
    )
    .unwrap();
    let replayed = run_local("hyb/chain", 80, 13, &a, &b, &mut alice, &mut bob).unwrap();
    assert_eq!(replayed.transcript.to_bytes(), base.transcript.to_bytes());
    assert_eq!(replayed.y1, base.y1);
}

#[test]
fn out_of_order_frames_are_rejected() {
    let circuit = and_circuit();
    let mut alice = GcAlice::new(circuit, 80, vec![true], false, 1, CoinRng::new(1, Role::Alice));
    let stray = sfe_core::protocol::Frame::new(FrameKind::OtPads, 1, vec![0; 11]);
    let err = alice.step(Some(stray)).unwrap_err();
    assert!(matches!(err, ProtocolError::UnexpectedFrame { .. }), "got {err:?}");
}

#[test]
fn tcp_transport_produces_the_in_process_transcript() {
    // Circuit protocol across a real socket.
    let circuit = Arc::new(gen_millionaires(8));
    let a = u64_to_bits(180, 8);
    let b = u64_to_bits(75, 8);
    let local = run_gc_local(&circuit, 80, false, &a, &b, 21).unwrap();

    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let circuit_b = circuit.clone();
    let b_thread = b.clone();
    let bob = std::thread::spawn(move || {
        let mut stream = std::net::TcpStream::connect(addr).unwrap();
        let mut machine = sfe_core::protocol::GcBob::new(
            circuit_b,
            80,
            b_thread.clone(),
            false,
            1,
            CoinRng::new(21, Role::Bob),
        );
        run_tcp(&mut stream, Role::Bob, &mut machine, "gc", 80, 21, &b_thread).unwrap()
    });
    let (mut stream, _) = listener.accept().unwrap();
    let mut machine =
        GcAlice::new(circuit.clone(), 80, a.clone(), false, 1, CoinRng::new(21, Role::Alice));
    let alice_run = run_tcp(&mut stream, Role::Alice, &mut machine, "gc", 80, 21, &a).unwrap();
    let bob_run = bob.join().unwrap();

    assert_eq!(alice_run.y0, local.y0);
    assert_eq!(alice_run.transcript.to_bytes(), local.transcript.to_bytes());
    assert_eq!(bob_run.transcript.to_bytes(), local.transcript.to_bytes());

    // Composed protocol across a socket: the first party's endpoint holds
    // the oracle log, so her transcript is the canonical one.
    let scheme = Arc::new(chain_scheme(true));
    let a = bytes_to_bits(&[55, 66]);
    let b = bytes_to_bits(&[77, 88]);
    let (local, _oracle) = run_hyb_local(&scheme, 80, &a, &b, 23).unwrap();

    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let scheme_b = scheme.clone();
    let b_thread = b.clone();
    let bob = std::thread::spawn(move || {
        let (_oracle, key) = setup_oracle(&scheme_b, 23).unwrap();
        let mut stream = std::net::TcpStream::connect(addr).unwrap();
        let mut machine =
            HybBob::new(scheme_b, key, 80, &b_thread, CoinRng::new(23, Role::Bob)).unwrap();
        run_tcp(&mut stream, Role::Bob, &mut machine, "hyb/chain", 80, 23, &b_thread).unwrap()
    });
    let (mut stream, _) = listener.accept().unwrap();
    let (oracle, _key) = setup_oracle(&scheme, 23).unwrap();
    let mut machine =
        HybAlice::new(scheme.clone(), oracle, 80, &a, CoinRng::new(23, Role::Alice)).unwrap();
    let alice_run =
        run_tcp(&mut stream, Role::Alice, &mut machine, "hyb/chain", 80, 23, &a).unwrap();
    let bob_run = bob.join().unwrap();

    assert_eq!(alice_run.transcript.to_bytes(), local.transcript.to_bytes());
    assert_eq!(bob_run.y1, local.y1);
    // The second party's endpoint lacks only the oracle log.
    assert_eq!(bob_run.transcript.messages, local.transcript.messages);
    assert!(bob_run.transcript.oracle_log.is_empty());
}
