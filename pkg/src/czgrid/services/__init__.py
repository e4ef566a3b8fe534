"""Experiment harness services"""
