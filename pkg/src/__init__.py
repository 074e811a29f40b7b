"""随机大涡模拟流水线 - 记忆方程、高斯滤波与分数布朗运动闭合"""

__version__ = "1.0.0"
