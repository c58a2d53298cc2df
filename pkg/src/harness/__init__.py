# Harness module
