# Trust-Region Gradient Methods
