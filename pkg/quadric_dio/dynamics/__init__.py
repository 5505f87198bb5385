"""对角流、格标架与对应原理。"""
