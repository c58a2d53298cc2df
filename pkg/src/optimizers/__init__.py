# Optimizers module
