#!/usr/bin/env python3
"""
Quick smoke test for hpr components
"""

import sys
import os

# Add src directory to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

def test_config():
    """Test configuration system"""
    print("Testing configuration system...")
    try:
        from config import Config
        config = Config("qwf_gaussian")

        print(f"✅ Config loaded successfully")
        print(f"   Solver: {config.get('solver.name')}")
        print(f"   Model: {config.get('model.kind')} (n = {config.get('model.n')})")
        print(f"   m/n grid: {config.get('sweep.m_over_n')}")

        return True
    except Exception as e:
        print(f"❌ Config test failed: {e}")
        return False

def test_algebra():
    """Test quaternion and octonion products"""
    print("\nTesting algebra...")
    try:
        from algebra import Octonion, Quaternion

        i, j, k = Quaternion(0, 1), Quaternion(0, 0, 1), Quaternion(0, 0, 0, 1)
        e1, e2, e4 = Octonion.basis(1), Octonion.basis(2), Octonion.basis(4)
        ok = i * j == k and (e1 * e2) * e4 == -(e1 * (e2 * e4))
        mark = "✅" if ok else "❌"
        print(f"{mark} ij = k, octonions non-associative")

        return ok
    except Exception as e:
        print(f"❌ Algebra test failed: {e}")
        return False

def test_models():
    """Test every measurement model on a random signal"""
    print("\nTesting measurement models...")
    try:
        import numpy as np
        from selftest import small_models

        rng = np.random.default_rng(0)
        for model in small_models(0):
            x = model.algebra.random(model.n, rng)
            y = model.measure(x)
            print(f"   ✓ {model.kind.value}: m = {model.m}, n = {model.n}, |y| = {np.sum(y):.3f}")

        print("✅ Models loaded successfully")
        return True
    except Exception as e:
        print(f"❌ Model test failed: {e}")
        return False

def test_solver():
    """Test one small QWF recovery"""
    print("\nTesting QWF solver...")
    try:
        import numpy as np
        from algebra import QUATERNION, HyperVector
        from sensing import sample_gaussian
        from solvers import SolverConfig, relative_distance, solve

        model = sample_gaussian("gaussian-q", 64, 4, seed=1)
        x = HyperVector.random(QUATERNION, 4, np.random.default_rng(1))
        result = solve("qwf", model, model.measure(x), SolverConfig(max_iters=500), seed=2)
        error = relative_distance(model, result.estimate, x)
        print(f"✅ Solver finished: {result.status}, {result.iterations_used} iterations")
        print(f"   Relative distance: {error:.2e}")

        return True
    except Exception as e:
        print(f"❌ Solver test failed: {e}")
        return False

def main():
    """Run all tests"""
    print("=== hpr Component Tests ===\n")

    tests = [
        test_config,
        test_algebra,
        test_models,
        test_solver
    ]

    results = []
    for test in tests:
        try:
            result = test()
            results.append(result)
        except Exception as e:
            print(f"❌ Test failed with exception: {e}")
            results.append(False)

    print(f"\n=== Test Results ===")
    passed = sum(results)
    total = len(results)
    print(f"Passed: {passed}/{total}")

    if passed == total:
        print("🎉 All tests passed! hpr should work correctly.")
        return 0
    else:
        print("⚠️  Some tests failed. Check the output above.")
        return 1

if __name__ == "__main__":
    sys.exit(main())
