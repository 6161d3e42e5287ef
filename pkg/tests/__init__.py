"""Tests for the slbfgs package."""
