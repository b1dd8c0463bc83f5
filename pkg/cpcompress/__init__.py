""" Control-plane compression: shrinks a network into a smaller one with
the same stable routing behavior, and checks the result. """
