"""
Unit tests for distributed fields: element codecs, storage layout, halo
exchange and gather
"""

import random
import unittest
import sys
import os

import numpy as np

# Add the parent directory to the path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from helpers import rendezvous_wrapper
from src.field import (
    ComplexElement,
    Field,
    MatrixElement,
    RawElement,
    RecordElement,
    VectorElement,
    new_field,
)
from src.lattice import Lattice, LatticeSpec, slab_partitioner, strided_partitioner
from src.linalg import I, Matrix
from src.shared.errors import ConfigurationError, DimensionError, DomainError, LocalityError
from src.transport import InProcessHub, InstrumentedEndpoint, run_inprocess


def index_field(lattice: Lattice) -> Field:
    """Complex field whose owned sites hold their global index."""
    field = Field(lattice, ComplexElement())
    field.local_array()[:] = lattice.local_sites
    return field


def random_spec(rng: random.Random) -> LatticeSpec:
    ndim = rng.randint(1, 3)
    dims = tuple(rng.randint(2, 8) for _ in range(ndim))
    volume = int(np.prod(dims))
    nranks = rng.randint(1, min(6, volume))
    partitioner = rng.choice([slab_partitioner, strided_partitioner])
    return LatticeSpec(dims, nranks=nranks, seed=rng.getrandbits(64), partitioner=partitioner)


class TestElements(unittest.TestCase):
    """Fixed-size little-endian element codecs"""

    def test_matrix_element(self):
        element = MatrixElement(2, 2)
        self.assertEqual(element.byte_size, 64)
        m = Matrix.from_rows([[1, I], [3, 1]])
        raw = element.encode(m)
        self.assertEqual(raw[:16], np.array([1.0, 0.0]).astype("<f8").tobytes())
        self.assertEqual(raw[16:32], np.array([0.0, 1.0]).astype("<f8").tobytes())
        self.assertEqual(element.decode(raw), m)
        self.assertEqual(element.zero(), Matrix(2, 2))

    def test_matrix_element_shape_mismatch(self):
        with self.assertRaises(DimensionError):
            MatrixElement(2, 2).encode(Matrix(3, 3))

    def test_complex_element(self):
        element = ComplexElement()
        self.assertEqual(element.byte_size, 16)
        self.assertEqual(element.decode(element.encode(2 - 3j)), 2 - 3j)

    def test_vector_element(self):
        element = VectorElement(3)
        self.assertEqual(element.byte_size, 48)
        decoded = element.decode(element.encode([1, 2j, 3]))
        self.assertEqual(decoded.tolist(), [1, 2j, 3])
        with self.assertRaises(DimensionError):
            element.encode([1, 2])

    def test_record_element(self):
        element = RecordElement([("w", "<i4", (10,))])
        self.assertEqual(element.byte_size, 40)
        raw = element.encode((list(range(10)),))
        self.assertEqual(raw[:8], b"\x00\x00\x00\x00\x01\x00\x00\x00")
        self.assertEqual(element.decode(raw)["w"].tolist(), list(range(10)))

    def test_raw_element(self):
        element = RawElement(5)
        self.assertEqual(element.decode(element.encode(b"hello")), b"hello")
        with self.assertRaises(DimensionError):
            element.encode(b"hi")
        with self.assertRaises(ConfigurationError):
            element.decode(b"toolong")


class TestFieldLocal(unittest.TestCase):
    """Single-rank access rules and layout"""

    def setUp(self):
        self.lattices = [Lattice.build(LatticeSpec((4,), nranks=2), r) for r in range(2)]
        self.field = new_field(self.lattices[0], MatrixElement(2, 2))

    def test_layout(self):
        field = self.field
        self.assertEqual(field.n_local, 2)
        self.assertEqual(field.n_slots, 4)
        self.assertEqual(field.slot_of(0), 0)
        self.assertEqual(field.slot_of(1), 1)
        self.assertEqual(field.halo_range(1), (2, 4))
        self.assertEqual(field.slot_of(3), 3)
        self.assertEqual(len(field.storage), 4 * 64)
        self.assertEqual(field.array().shape, (4, 2, 2))

    def test_set_and_get(self):
        m = Matrix.from_rows([[1, 2], [3, 4]])
        self.field[1] = m
        self.assertEqual(self.field[1], m)
        self.assertEqual(self.field.get(self.lattices[0].site(1)), m)
        self.assertEqual(self.field.local_array()[1, 1, 0], 3)

    def test_halo_is_read_only(self):
        with self.assertRaises(LocalityError):
            self.field[2] = Matrix(2, 2)

    def test_absent_site(self):
        lattices = [Lattice.build(LatticeSpec((8,), nranks=2), r) for r in range(2)]
        field = Field(lattices[0], ComplexElement())
        with self.assertRaises(LocalityError):
            field[5]
        with self.assertRaises(DomainError):
            field[8]

    def test_site_from_other_lattice(self):
        with self.assertRaises(LocalityError):
            self.field[self.lattices[1].site(2)]

    def test_fill(self):
        self.field.fill(Matrix.from_rows([[1, 0], [0, 1]]))
        self.assertEqual(self.field[0][1, 1], 1)
        self.assertEqual(self.field.array()[2:].tolist(), np.zeros((2, 2, 2)).tolist())

    def test_empty_element_rejected(self):
        with self.assertRaises(ConfigurationError):
            Field(self.lattices[0], RawElement(0))

    def test_endpoint_must_match(self):
        hub = InProcessHub(3)
        with self.assertRaises(ConfigurationError):
            self.field.update(hub.endpoint(0))


class TestHaloExchange(unittest.TestCase):
    """update() and gather() across ranks"""

    def test_halo_coherence_random_configurations(self):
        rng = random.Random(31337)
        for trial in range(60):
            spec = random_spec(rng)
            lattices = [Lattice.build(spec, r) for r in range(spec.nranks)]

            def target(endpoint):
                field = index_field(lattices[endpoint.rank])
                field.update(endpoint)
                return field

            with self.subTest(trial=trial, dims=spec.dims, nranks=spec.nranks):
                fields = run_inprocess(spec.nranks, target, jitter=0.0002, seed=trial, timeout=30)
                for field in fields:
                    lattice = field.lattice
                    for peer, sites in lattice.halo_lists.items():
                        owner_field = fields[peer]
                        for site in sites:
                            self.assertEqual(field.get_bytes(site), owner_field.get_bytes(site))
                            self.assertEqual(field[site], complex(site))

    def test_message_economy(self):
        spec = LatticeSpec((6, 5, 4), nranks=4, partitioner=strided_partitioner)
        lattices = [Lattice.build(spec, r) for r in range(spec.nranks)]
        pairs = {
            (min(r, p), max(r, p)) for r in range(spec.nranks) for p in lattices[r].overlapping_peers
        }

        def target(endpoint):
            field = index_field(lattices[endpoint.rank])
            counts = []
            for _ in range(3):
                endpoint.reset()
                field.update(endpoint)
                counts.append((
                    endpoint.messages_sent,
                    endpoint.messages_received,
                    endpoint.max_outstanding_sends,
                    endpoint.max_outstanding_recvs,
                ))
            return counts

        results = run_inprocess(spec.nranks, target, timeout=30, wrap=InstrumentedEndpoint)
        for sweep in range(3):
            sent = sum(results[r][sweep][0] for r in range(spec.nranks))
            received = sum(results[r][sweep][1] for r in range(spec.nranks))
            self.assertEqual(sent, 2 * len(pairs))
            self.assertEqual(received, 2 * len(pairs))
            for r in range(spec.nranks):
                self.assertEqual(results[r][sweep][0], len(lattices[r].overlapping_peers))
                self.assertLessEqual(results[r][sweep][2], 1)
                self.assertLessEqual(results[r][sweep][3], 1)

    def test_receives_land_in_halo_blocks(self):
        spec = LatticeSpec((4, 4, 4), nranks=3)
        lattices = [Lattice.build(spec, r) for r in range(spec.nranks)]

        def target(endpoint):
            field = index_field(lattices[endpoint.rank])
            field.update(endpoint)
            targets = []
            for peer, view in endpoint.receive_targets:
                received = np.frombuffer(view, dtype=np.uint8)
                targets.append((
                    np.shares_memory(received, field.halo_block(peer)),
                    len(received) == len(field.halo_block(peer)),
                ))
            return targets

        for targets in run_inprocess(spec.nranks, target, timeout=30, wrap=InstrumentedEndpoint):
            self.assertTrue(targets)
            for shares, same_size in targets:
                self.assertTrue(shares)
                self.assertTrue(same_size)

    def test_update_with_synchronous_sends(self):
        spec = LatticeSpec((3, 3, 3), nranks=5)
        lattices = [Lattice.build(spec, r) for r in range(spec.nranks)]

        def target(endpoint):
            field = index_field(lattices[endpoint.rank])
            for _ in range(3):
                field.update(endpoint)
            return field

        fields = run_inprocess(
            spec.nranks, target, jitter=0.0005, seed=9, timeout=30, wrap=rendezvous_wrapper(spec.nranks)
        )
        for field in fields:
            for sites in field.lattice.halo_lists.values():
                for site in sites:
                    self.assertEqual(field[site], complex(site))

    def test_gather_is_partition_independent(self):
        reference = None
        for nranks, partitioner in ((1, slab_partitioner), (3, slab_partitioner), (4, strided_partitioner)):
            spec = LatticeSpec((5, 4), nranks=nranks, partitioner=partitioner)
            lattices = [Lattice.build(spec, r) for r in range(nranks)]

            def target(endpoint):
                return index_field(lattices[endpoint.rank]).gather(endpoint)

            results = run_inprocess(nranks, target, timeout=30)
            self.assertTrue(all(r is None for r in results[1:]))
            gathered = np.frombuffer(results[0], dtype="<c16")
            self.assertEqual(gathered.tolist(), [complex(i) for i in range(20)])
            if reference is None:
                reference = results[0]
            self.assertEqual(results[0], reference)


if __name__ == '__main__':
    unittest.main()
