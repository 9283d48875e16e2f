"""
FastAPI endpoints for the F-nef Verifier.
"""
