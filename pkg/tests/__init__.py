"""Test suite for Inception Video Predictor."""
