"""Turnstile-streaming laboratory.

Turnstile stream algebra, a generalized linear sketch over a finite module,
explicit compilers from deterministic streaming algorithms to that sketch,
a three-player parity gadget separating constrained streaming from sketching,
and two triangle-counting estimators, with a seeded experiment harness.
"""

from .streams import (ConstraintReport, FrequencyVector, Stream, StreamConstraint,
                      Update, canonical_stream, check_constraint, concat, freq,
                      lint_zero_deltas, little_endian_iter, little_endian_vector,
                      negate, read_stream, repeat, write_stream)
from .module_sketch import (SketchParams, SketchVector, apply_update, canonicalize,
                            module_add, module_neg, params_bits, params_from_json,
                            params_to_json, random_params, scalar_mul, sketch_stream,
                            space_bits, state_bits)
from .reduction import (CollisionWitness, CompilationTrace, DeterministicAlg,
                        SegmentSpec, StateBudgetError, compile_general, compile_total,
                        enumeration_updates, recover_general, recover_total,
                        recovery_stream, run_on_stream)
from .promise import (BOT, BinaryTracker, BoxedTracker, EncodedInstance,
                      InvalidInstance, Layout, PromiseInstance, Schedule,
                      bits_from_signs, decode_instance, encode_instance,
                      instance_stream, random_instance, sign_correct,
                      track_amplified, track_binary, track_boxed,
                      validate_instance)
from .triangles import (EstimateResult, GeneratedGraphStream, GraphStreamSpec,
                        InfeasibleSpec, KWiseHash, count_triangles, edge_coord,
                        coord_edge, edge_key, estimate_bounded_degree,
                        estimate_bounded_length, generate_graph_stream,
                        graph_dimension, insert_only_stream, make_kwise_hash,
                        median_of_runs, random_degree_graph)
from .harness import (SpaceMeter, TrialReport, run_experiment, trial_rng,
                      trial_seed, wilson_interval)

__all__ = [name for name in dir() if not name.startswith("_")]
