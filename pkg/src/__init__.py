# Minimal Clifford measurement shadow estimation
